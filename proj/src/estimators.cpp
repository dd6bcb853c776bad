#include "cfo/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cfo/channel.hpp"
#include "cfo/error.hpp"

namespace cfo {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double principal_angle(cplx z) {
    const double a = std::arg(z);
    return a <= -std::numbers::pi ? std::numbers::pi : a;
}

CfoEstimate finish(cplx corr, double delta_t_s, std::size_t n_pairs) {
    if (std::abs(corr) == 0.0) throw Error(ErrorKind::ZeroCorrelation, "accumulated correlation is zero");
    CfoEstimate est;
    est.delta_t_s = delta_t_s;
    est.range_hz = 1.0 / (2.0 * delta_t_s);
    // Clamp guards the last ulp when the angle sits exactly at +pi.
    est.f_hat_hz = std::min(principal_angle(corr) / (kTwoPi * delta_t_s), est.range_hz);
    est.corr_mag = std::abs(corr);
    est.n_pairs = n_pairs;
    return est;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) noexcept {
    switch (kind) {
        case EstimatorKind::cp: return "cp";
        case EstimatorKind::preamble: return "preamble";
        case EstimatorKind::pilot: return "pilot";
    }
    return "?";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
    if (name == "cp") return EstimatorKind::cp;
    if (name == "preamble") return EstimatorKind::preamble;
    if (name == "pilot") return EstimatorKind::pilot;
    throw Error(ErrorKind::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

EstimatorSpec cp_estimator_spec(const Numerology& numerology, std::size_t n_symbols) {
    if (n_symbols == 0 || numerology.cp_len() == 0)
        throw Error(ErrorKind::InvalidArgument, "CP estimator needs a CP and at least one symbol");
    EstimatorSpec spec;
    spec.kind = EstimatorKind::cp;
    spec.delta_t_s = static_cast<double>(numerology.n_fft()) / numerology.sample_rate_hz();
    spec.n_pairs = n_symbols * numerology.cp_len();
    spec.n_symbols = n_symbols;
    spec.description = "cyclic-prefix correlation over " + std::to_string(n_symbols) + " symbols";
    return spec;
}

EstimatorSpec preamble_estimator_spec(const Numerology& numerology, std::uint64_t preamble_seed) {
    EstimatorSpec spec;
    spec.kind = EstimatorKind::preamble;
    spec.delta_t_s = static_cast<double>(numerology.n_fft() / 2) / numerology.sample_rate_hz();
    spec.n_pairs = numerology.n_fft() / 2;
    spec.n_symbols = 1;
    spec.preamble_seed = preamble_seed;
    spec.description = "half-preamble correlation";
    return spec;
}

EstimatorSpec pilot_estimator_spec(const Numerology& numerology, const PilotLayout& layout) {
    validate(layout, numerology.n_fft());
    EstimatorSpec spec;
    spec.kind = EstimatorKind::pilot;
    spec.delta_t_s = static_cast<double>(layout.symbol_spacing()) * numerology.symbol_duration_s();
    spec.n_pairs = layout.pilot_subcarriers.size();
    spec.n_symbols = layout.pilot_symbol_indices.second + 1;
    spec.pilot_layout = layout;
    spec.description = "pilot channel-phase tracking over " + std::to_string(layout.symbol_spacing()) +
                       " symbols";
    return spec;
}

double phase_diff(cplx r1, cplx r2) {
    if (r1 == cplx{} || r2 == cplx{}) throw Error(ErrorKind::ZeroInput, "phase of a zero sample");
    return principal_angle(std::conj(r1) * r2);
}

CfoEstimate estimate_cp(const TimeSignal& signal, const Numerology& numerology, std::size_t n_symbols) {
    validate(signal);
    const std::size_t n = numerology.n_fft();
    const std::size_t cp = numerology.cp_len();
    const std::size_t step = numerology.symbol_len();
    if (cp == 0) throw Error(ErrorKind::InvalidArgument, "numerology has no cyclic prefix");
    if (n_symbols == 0 || signal.samples.size() < n_symbols * step)
        throw Error(ErrorKind::InsufficientSamples, "signal does not cover the requested symbols");

    cplx corr{};
    for (std::size_t s = 0; s < n_symbols; ++s) {
        const std::size_t base = s * step;
        for (std::size_t k = 0; k < cp; ++k)
            corr += std::conj(signal.samples[base + k]) * signal.samples[base + k + n];
    }
    return finish(corr, static_cast<double>(n) / signal.sample_rate_hz, n_symbols * cp);
}

CfoEstimate estimate_preamble(const TimeSignal& signal, const TimeSignal& reference) {
    validate(signal);
    validate(reference);
    const std::size_t n = reference.samples.size();
    if (signal.samples.size() != n || n < 2 || n % 2 != 0)
        throw Error(ErrorKind::LengthMismatch, "received preamble must match the even-length reference");

    const std::size_t half = n / 2;
    cplx front{}, back{};
    for (std::size_t k = 0; k < half; ++k) {
        front += signal.samples[k] * std::conj(reference.samples[k]);
        back += signal.samples[k + half] * std::conj(reference.samples[k + half]);
    }
    return finish(std::conj(front) * back, static_cast<double>(half) / signal.sample_rate_hz, half);
}

CfoEstimate estimate_pilot(const ResourceGrid& grid, const PilotLayout& layout, const PilotMap& pilots,
                           const Numerology& numerology) {
    const auto [first, second] = layout.pilot_symbol_indices;
    if (first >= second) throw Error(ErrorKind::InvalidArgument, "pilot symbols must be ordered");
    if (second >= grid.n_symbols() || layout.pilot_subcarriers.empty())
        throw Error(ErrorKind::MissingPilots, "grid does not contain both pilot symbols");

    cplx corr{};
    for (std::size_t k : layout.pilot_subcarriers) {
        if (k >= grid.n_subcarriers()) throw Error(ErrorKind::MissingPilots, "pilot subcarrier outside grid");
        const auto x1 = pilots.find({first, k});
        const auto x2 = pilots.find({second, k});
        if (x1 == pilots.end() || x2 == pilots.end() || x1->second == cplx{} || x2->second == cplx{})
            throw Error(ErrorKind::MissingPilots, "no known pilot value at subcarrier " + std::to_string(k));
        const cplx h1 = grid(first, k) / x1->second;
        const cplx h2 = grid(second, k) / x2->second;
        corr += std::conj(h1) * h2;
    }
    const double delta_t = static_cast<double>(second - first) * numerology.symbol_duration_s();
    return finish(corr, delta_t, layout.pilot_subcarriers.size());
}

TimeSignal compensate(const TimeSignal& signal, double f_hat_hz) { return apply_cfo(signal, -f_hat_hz, 0.0); }

}  // namespace cfo
