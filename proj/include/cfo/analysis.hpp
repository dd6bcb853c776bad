#pragma once

#include <cmath>
#include <cstddef>

#include "cfo/estimators.hpp"

namespace cfo::analysis {

// Closed-form error model for two-moment phase-difference estimators.
//
// A phase-difference estimator measures the phase of the same known signal at
// two moments delta_t apart. With an effective SNR snr_e (signal energy over
// the noise left after the estimator's averaging), the estimate is modelled as
// Gaussian around the true offset with
//
//   V[f_hat] = (1 / (2 pi delta_t))^2 * (1 / (2 snr_e^2) + 1 / snr_e) / cos^4(2 pi f_e delta_t).
//
// The model rests on a small-angle approximation, so it is meant for
// |2 pi f_e delta_t| << 1.

struct ErrorModelInput {
    double snr_e = 0.0;  // linear
    double delta_t_s = 0.0;
    double f_e_hz = 0.0;
};

struct CriterionInput {
    double p_e = 0.1;
    double delta_fmax_hz = 300.0;
    double delta_t_s = 0.0;
    double snr_e = 0.0;  // linear
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

/// Gaussian upper tail, Q(x) = 0.5 * erfc(x / sqrt(2)).
double q_function(double x);

/// Inverse of q_function by bisection, |dx| <= 1e-9. Throws DomainError
/// outside (0, 1).
double q_inv(double p);

/// Variance of the offset estimate in Hz^2. Throws DomainError if
/// snr_e <= 0, delta_t <= 0 or cos(2 pi f_e delta_t) <= 0.
double cfo_variance(const ErrorModelInput& input);

/// Smallest tolerable error bound that holds with probability 1 - p_e:
/// Q^-1(p_e / 2) * sqrt(V) with the cos^4 term taken as 1.
double max_error_at_confidence(double p_e, double delta_t_s, double snr_e);

/// True when max_error_at_confidence(p_e, delta_t, snr_e) <= delta_fmax.
bool criterion_satisfied(const CriterionInput& input);

/// Smallest linear snr_e for which the criterion holds. The bound is
/// strictly decreasing in snr_e and tends to zero, so a solution always
/// exists; it is obtained in closed form from the quadratic in 1/snr_e.
double min_snr_for_target(double p_e, double delta_fmax_hz, double delta_t_s);

/// Coherent combining gain over M correlated pairs: M * raw_snr.
double effective_snr(double raw_snr, std::size_t n_pairs);

/// The estimator's phase-noise variance as a function of the per-sample SNR
/// rho is a / rho + b / rho^2.
struct PhaseNoiseCoefficients {
    double a = 0.0;
    double b = 0.0;
};

/// Coefficients for each estimator structure:
///  - preamble sums M pairs coherently before the single product, so it
///    reproduces the model exactly with snr_e = M * rho (a = 1/M, b = 1/(2M^2)).
///  - pilot forms M products of noisy pairs and then sums them; the
///    noise-times-noise term only averages down by M (a = 1/M, b = 1/(2M)).
///  - cp does the same on random data samples whose power fluctuates; with
///    approximately Gaussian OFDM samples the sum of M sample powers is
///    Gamma(M), giving a = 1/(M-1), b = M / (2 (M-1)(M-2)). Needs M >= 3.
PhaseNoiseCoefficients phase_noise_coefficients(EstimatorKind kind, std::size_t n_pairs);

/// Phase-difference variance (rad^2) implied by the coefficients at per-sample SNR rho.
double phase_noise_variance(EstimatorKind kind, double raw_snr, std::size_t n_pairs);

/// snr_e whose model phase variance 1/snr_e + 1/(2 snr_e^2) equals v.
double snr_from_phase_variance(double variance_rad2);

/// Effective SNR of a given estimator at per-sample SNR raw_snr, matched on
/// phase variance. For the preamble estimator this equals effective_snr().
double estimator_effective_snr(EstimatorKind kind, double raw_snr, std::size_t n_pairs);

/// Inverse of estimator_effective_snr: the per-sample SNR giving snr_e.
double raw_snr_for_effective(EstimatorKind kind, double snr_e, std::size_t n_pairs);

/// Half-width of the unambiguous range, 1 / (2 delta_t).
double estimation_range(double delta_t_s);

/// Tolerable offset for QPSK over n_symbols, written as scs / (2 * n_symbols * 8);
/// gives 234.375 Hz for (15 kHz, 4).
double qpsk_fmax(double scs_hz, std::size_t n_symbols);

/// Offset that rotates a QPSK point by pi/4 over n_symbols symbol durations
/// of 1/scs: (pi/4) / (2 pi n_symbols / scs) = scs / (8 n_symbols). Twice qpsk_fmax.
double qpsk_phase_margin_fmax(double scs_hz, std::size_t n_symbols);

}  // namespace cfo::analysis
