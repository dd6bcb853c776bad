#pragma once

#include <cstdint>
#include <limits>

#include "cfo/numerology.hpp"

namespace cfo {

/// Passing this as snr_db disables noise.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct ChannelConfig {
    double cfo_hz = 0.0;
    double phase_rad = 0.0;
    double gain = 1.0;
    /// Per-sample signal power over noise power, against measured signal power.
    double snr_db = kNoNoise;
    std::uint64_t seed = 0;
};

/// Multiplies sample n by exp(j(2*pi*cfo_hz*n/fs + start_phase_rad)). Positive
/// offsets advance the phase, and the rotation is continuous over the buffer.
TimeSignal apply_cfo(const TimeSignal& signal, double cfo_hz, double start_phase_rad = 0.0);

/// Adds circular complex Gaussian noise of variance P/10^(snr_db/10), with P
/// the measured mean power. Throws ZeroPowerSignal for an all-zero input.
TimeSignal apply_awgn(const TimeSignal& signal, double snr_db, std::uint64_t seed);

/// gain * exp(j*phase) * CFO rotation, then AWGN.
TimeSignal transmit(const TimeSignal& signal, const ChannelConfig& cfg);

}  // namespace cfo
