#include "cfo/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cfo/error.hpp"

namespace cfo {

TimeSignal apply_cfo(const TimeSignal& signal, double cfo_hz, double start_phase_rad) {
    validate(signal);
    if (!std::isfinite(cfo_hz) || !std::isfinite(start_phase_rad))
        throw Error(ErrorKind::InvalidArgument, "non-finite frequency offset or phase");

    TimeSignal out = signal;
    if (cfo_hz == 0.0 && start_phase_rad == 0.0) return out;

    // Reduce the per-sample step to cycles so long buffers keep full precision.
    const double cycles_per_sample = cfo_hz / signal.sample_rate_hz;
    for (std::size_t n = 0; n < out.samples.size(); ++n) {
        const double cycles = std::fmod(cycles_per_sample * static_cast<double>(n), 1.0);
        out.samples[n] *= std::polar(1.0, 2.0 * std::numbers::pi * cycles + start_phase_rad);
    }
    return out;
}

TimeSignal apply_awgn(const TimeSignal& signal, double snr_db, std::uint64_t seed) {
    validate(signal);
    if (std::isinf(snr_db) && snr_db > 0.0) return signal;
    if (!std::isfinite(snr_db)) throw Error(ErrorKind::InvalidArgument, "snr_db must be finite or +inf");

    const double power = signal.mean_power();
    if (power == 0.0) throw Error(ErrorKind::ZeroPowerSignal, "cannot set SNR against a zero signal");

    const double noise_var = power / std::pow(10.0, snr_db / 10.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(noise_var / 2.0));

    TimeSignal out = signal;
    for (auto& s : out.samples) {
        const double re = normal(rng);
        const double im = normal(rng);
        s += cplx(re, im);
    }
    return out;
}

TimeSignal transmit(const TimeSignal& signal, const ChannelConfig& cfg) {
    if (!(cfg.gain > 0.0) || !std::isfinite(cfg.gain))
        throw Error(ErrorKind::InvalidArgument, "channel gain must be positive");
    if (!std::isfinite(cfg.phase_rad))
        throw Error(ErrorKind::InvalidArgument, "channel phase must be finite");

    TimeSignal out = apply_cfo(signal, cfg.cfo_hz, cfg.phase_rad);
    if (cfg.gain != 1.0)
        for (auto& s : out.samples) s *= cfg.gain;
    return apply_awgn(out, cfg.snr_db, cfg.seed);
}

}  // namespace cfo
