#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "cfo/numerology.hpp"

namespace cfo {

/// An offset estimate together with the interval it was measured over.
struct CfoEstimate {
    double f_hat_hz = 0.0;
    double delta_t_s = 0.0;
    /// Half-width of the unambiguous range, 1 / (2 * delta_t_s).
    double range_hz = 0.0;
    /// Magnitude of the accumulated correlation.
    double corr_mag = 0.0;
    std::size_t n_pairs = 0;
};

enum class EstimatorKind { cp, preamble, pilot };

std::string_view to_string(EstimatorKind kind) noexcept;
/// Parses "cp", "preamble" or "pilot"; throws InvalidArgument otherwise.
EstimatorKind parse_estimator_kind(std::string_view name);

/// Describes one configured estimator: its measurement interval and the number
/// of correlated pairs it accumulates. The last three fields carry what is
/// needed to build a matching test signal.
struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::cp;
    double delta_t_s = 0.0;
    std::size_t n_pairs = 0;
    std::string description;

    std::size_t n_symbols = 0;       // cp: symbols in the correlated block
    PilotLayout pilot_layout;        // pilot
    std::uint64_t preamble_seed = 1;  // preamble
};

/// CP estimator over `n_symbols` symbols: delta_t = N/fs, M = n_symbols * L.
EstimatorSpec cp_estimator_spec(const Numerology& numerology, std::size_t n_symbols);
/// Half-preamble correlation: delta_t = (N/2)/fs, M = N/2.
EstimatorSpec preamble_estimator_spec(const Numerology& numerology, std::uint64_t preamble_seed = 1);
/// Pilot estimator: delta_t = spacing * (N+L)/fs, M = number of pilot subcarriers.
EstimatorSpec pilot_estimator_spec(const Numerology& numerology, const PilotLayout& layout);

/// Principal angle of conj(r1) * r2 in (-pi, pi]. Throws ZeroInput on a zero argument.
double phase_diff(cplx r1, cplx r2);

/// Correlates each cyclic prefix with the tail it copies, summed over
/// `n_symbols` symbols starting at sample 0, then takes one angle.
CfoEstimate estimate_cp(const TimeSignal& signal, const Numerology& numerology, std::size_t n_symbols);

/// Correlates the front and back halves of the received preamble against the
/// known reference and measures the phase advance between them.
CfoEstimate estimate_preamble(const TimeSignal& signal, const TimeSignal& reference);

/// Channel estimates H = Y/X on both pilot symbols, angle of sum(conj(H1) * H2).
CfoEstimate estimate_pilot(const ResourceGrid& grid, const PilotLayout& layout, const PilotMap& pilots,
                           const Numerology& numerology);

/// Removes an estimated offset: apply_cfo(signal, -f_hat_hz, 0).
TimeSignal compensate(const TimeSignal& signal, double f_hat_hz);

}  // namespace cfo
