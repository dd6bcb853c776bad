#include "cfo/analysis.hpp"

#include <cmath>
#include <numbers>

#include "cfo/error.hpp"

namespace cfo::analysis {
namespace {

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorKind::DomainError, what);
}

void require_probability(double p) { require(p > 0.0 && p < 1.0, "probability must lie in (0, 1)"); }

void require_pairs(std::size_t n_pairs) { require(n_pairs >= 1, "need at least one correlated pair"); }

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inv(double p) {
    require_probability(p);
    // Q(-40) and Q(40) are 1 and ~4e-350 in double precision, which brackets
    // every representable p.
    double lo = -40.0, hi = 40.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (q_function(mid) > p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double cfo_variance(const ErrorModelInput& input) {
    require(input.snr_e > 0.0, "effective SNR must be positive");
    require(input.delta_t_s > 0.0, "measurement interval must be positive");
    require(std::isfinite(input.f_e_hz), "offset must be finite");
    const double c = std::cos(2.0 * std::numbers::pi * input.f_e_hz * input.delta_t_s);
    require(c > 0.0, "offset outside the region where the model is defined");

    const double scale = 1.0 / (2.0 * std::numbers::pi * input.delta_t_s);
    const double s = input.snr_e;
    return scale * scale * (1.0 / (2.0 * s * s) + 1.0 / s) / (c * c * c * c);
}

double max_error_at_confidence(double p_e, double delta_t_s, double snr_e) {
    require_probability(p_e);
    return q_inv(p_e / 2.0) * std::sqrt(cfo_variance({snr_e, delta_t_s, 0.0}));
}

bool criterion_satisfied(const CriterionInput& input) {
    require(input.delta_fmax_hz > 0.0, "tolerable error must be positive");
    return max_error_at_confidence(input.p_e, input.delta_t_s, input.snr_e) <= input.delta_fmax_hz;
}

double min_snr_for_target(double p_e, double delta_fmax_hz, double delta_t_s) {
    require_probability(p_e);
    require(delta_fmax_hz > 0.0, "tolerable error must be positive");
    require(delta_t_s > 0.0, "measurement interval must be positive");
    // Bound^2 = (q / (2 pi dt))^2 * (1/s + 1/(2 s^2)); solve for the phase
    // variance the bound allows and invert.
    const double q = q_inv(p_e / 2.0);
    const double allowed = delta_fmax_hz * 2.0 * std::numbers::pi * delta_t_s / q;
    return snr_from_phase_variance(allowed * allowed);
}

double effective_snr(double raw_snr, std::size_t n_pairs) {
    require(raw_snr > 0.0, "SNR must be positive");
    require_pairs(n_pairs);
    return static_cast<double>(n_pairs) * raw_snr;
}

PhaseNoiseCoefficients phase_noise_coefficients(EstimatorKind kind, std::size_t n_pairs) {
    require_pairs(n_pairs);
    const double m = static_cast<double>(n_pairs);
    switch (kind) {
        case EstimatorKind::preamble: return {1.0 / m, 1.0 / (2.0 * m * m)};
        case EstimatorKind::pilot: return {1.0 / m, 1.0 / (2.0 * m)};
        case EstimatorKind::cp:
            require(n_pairs >= 3, "CP noise model needs at least three pairs");
            return {1.0 / (m - 1.0), m / (2.0 * (m - 1.0) * (m - 2.0))};
    }
    throw Error(ErrorKind::InvalidArgument, "unknown estimator kind");
}

double phase_noise_variance(EstimatorKind kind, double raw_snr, std::size_t n_pairs) {
    require(raw_snr > 0.0, "SNR must be positive");
    const auto c = phase_noise_coefficients(kind, n_pairs);
    return c.a / raw_snr + c.b / (raw_snr * raw_snr);
}

double snr_from_phase_variance(double variance_rad2) {
    require(variance_rad2 > 0.0, "variance must be positive");
    // 1/s = -1 + sqrt(1 + 2v), rearranged to avoid cancellation at small v.
    const double inv = 2.0 * variance_rad2 / (1.0 + std::sqrt(1.0 + 2.0 * variance_rad2));
    return 1.0 / inv;
}

double estimator_effective_snr(EstimatorKind kind, double raw_snr, std::size_t n_pairs) {
    if (kind == EstimatorKind::preamble) return effective_snr(raw_snr, n_pairs);
    return snr_from_phase_variance(phase_noise_variance(kind, raw_snr, n_pairs));
}

double raw_snr_for_effective(EstimatorKind kind, double snr_e, std::size_t n_pairs) {
    require(snr_e > 0.0, "SNR must be positive");
    if (kind == EstimatorKind::preamble) return snr_e / static_cast<double>(n_pairs);
    const auto c = phase_noise_coefficients(kind, n_pairs);
    const double v = 1.0 / snr_e + 1.0 / (2.0 * snr_e * snr_e);
    // b u^2 + a u - v = 0 with u = 1/rho, positive root in the stable form.
    const double u = 2.0 * v / (c.a + std::sqrt(c.a * c.a + 4.0 * c.b * v));
    return 1.0 / u;
}

double estimation_range(double delta_t_s) {
    require(delta_t_s > 0.0, "measurement interval must be positive");
    return 1.0 / (2.0 * delta_t_s);
}

double qpsk_fmax(double scs_hz, std::size_t n_symbols) {
    require(scs_hz > 0.0 && n_symbols > 0, "inputs must be positive");
    return scs_hz / (2.0 * static_cast<double>(n_symbols) * 8.0);
}

double qpsk_phase_margin_fmax(double scs_hz, std::size_t n_symbols) {
    require(scs_hz > 0.0 && n_symbols > 0, "inputs must be positive");
    return (std::numbers::pi / 4.0) / (2.0 * std::numbers::pi * static_cast<double>(n_symbols) / scs_hz);
}

}  // namespace cfo::analysis
