#include "dft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cfo::detail {
namespace {

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find({n, sign});
        if (it != plans_.end()) return it->second;
        // Planning may touch the arrays; scratch buffers keep callers' data intact.
        std::vector<std::complex<double>> a(static_cast<std::size_t>(n)), b(a.size());
        fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                                          reinterpret_cast<fftw_complex*>(b.data()), sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (plan == nullptr) throw std::runtime_error("fftw planning failed");
        plans_.emplace(std::make_pair(n, sign), plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

void run(std::span<const std::complex<double>> in, std::span<std::complex<double>> out, int sign) {
    if (in.size() != out.size()) throw std::invalid_argument("dft size mismatch");
    const int n = static_cast<int>(in.size());
    fftw_plan plan = cache().get(n, sign);
    if (in.data() == out.data()) {
        std::vector<std::complex<double>> copy(in.begin(), in.end());
        run(copy, out, sign);
        return;
    }
    // FFTW's new-array execute takes non-const input but does not modify it
    // for out-of-place transforms.
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : out) v *= scale;
}

}  // namespace

void dft_forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    run(in, out, FFTW_FORWARD);
}

void dft_inverse(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    run(in, out, FFTW_BACKWARD);
}

}  // namespace cfo::detail
