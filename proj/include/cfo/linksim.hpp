#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "cfo/estimators.hpp"
#include "cfo/numerology.hpp"
#include "cfo/scheme.hpp"

namespace cfo::linksim {

enum class SchemeMode { two_step, coarse_only, residual_only };

std::string_view to_string(SchemeMode mode) noexcept;
SchemeMode parse_scheme_mode(std::string_view name);

/// One point of a decode experiment. The transmitted frame spans
/// frame_symbols() OFDM symbols: a broadcast-like QPSK payload in the first
/// block_symbols symbols, pilots on the two layout symbols, and random QPSK
/// filler everywhere else.
struct TrialConfig {
    Numerology numerology = default_numerology();
    PilotLayout pilot_layout = default_pilot_layout(default_numerology());
    std::size_t block_symbols = 4;
    std::size_t payload_bits = 40;
    /// Each payload bit is sent `repetition` times and majority-voted (odd).
    std::size_t repetition = 21;
    double cfo_hz = 0.0;
    double snr_db = 0.0;
    SchemeMode mode = SchemeMode::two_step;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    /// Worker threads; results do not depend on it. 0 picks the hardware count.
    unsigned threads = 0;

    std::size_t frame_symbols() const;
    TwoStepConfig scheme_config() const;
};

/// Throws InvalidArgument for zero trials, an even repetition, or a payload
/// that does not fit in the block.
void validate(const TrialConfig& cfg);

struct TrialRecord {
    std::size_t trial_index = 0;
    double f_coarse_hz = 0.0;    // NaN when the stage is disabled
    double f_residual_hz = 0.0;  // NaN when disabled or skipped
    double final_error_hz = 0.0;
    std::size_t bit_errors = 0;
    bool decode_ok = false;
};

struct SummaryRow {
    double snr_db = 0.0;
    double cfo_hz = 0.0;
    SchemeMode mode = SchemeMode::two_step;
    double mean_err_hz = 0.0;
    double std_err_hz = 0.0;
    double model_std_hz = 0.0;
    double p_exceed_300 = 0.0;
    double p90_abs_err_hz = 0.0;
    double decode_rate = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t trials = 0;
};

/// Per-trial RNG seed from (master seed, trial index); a SplitMix64 mix so the
/// result does not depend on which worker runs the trial.
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index);

/// Runs fn(i) for i in [0, count) on `threads` workers and rethrows the first
/// exception. fn must only write state owned by index i.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Resource elements carrying the payload: non-pilot positions in
/// (symbol, subcarrier) order, as many as the coded bits need.
std::vector<PilotKey> payload_positions(const PilotLayout& layout, std::size_t grid_width,
                                        std::size_t payload_bits, std::size_t repetition);

/// Known bit sequence XORed onto the coded payload; both ends derive it from
/// the layout seed.
std::vector<std::uint8_t> scrambling_sequence(std::size_t length, std::uint64_t seed);

struct TransmitFrame {
    ResourceGrid grid;
    PilotMap pilots;
    std::vector<std::uint8_t> bits;
};

/// Builds the frame for one trial from its RNG seed.
TransmitFrame build_frame(const TrialConfig& cfg, std::uint64_t seed);

struct DecodeResult {
    std::vector<std::uint8_t> bits;
    std::size_t bit_errors = 0;
    bool decode_ok = false;
};

/// Equalizes with one flat gain (mean of Y/X over both pilot symbols), takes
/// QPSK hard decisions, descrambles and majority-votes each payload bit over
/// its copies.
/// Throws MissingPilots.
DecodeResult decode_block(const ResourceGrid& grid, const PilotMap& pilots, const PilotLayout& layout,
                          std::size_t payload_bits, std::size_t repetition,
                          const std::vector<std::uint8_t>& reference_bits);

TrialRecord run_trial(const TrialConfig& cfg, std::size_t trial_index);
std::vector<TrialRecord> run_trials(const TrialConfig& cfg);

/// Model std of the final error for the configured mode.
double model_error_std(const TrialConfig& cfg);

SummaryRow summarize(const TrialConfig& cfg, const std::vector<TrialRecord>& records);

/// One row per SNR in `snr_grid_db`; cfg.snr_db is ignored.
std::vector<SummaryRow> run_decode_sweep(const TrialConfig& cfg, const std::vector<double>& snr_grid_db);

/// Wilson score interval for k successes in n trials.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};
Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct EstimatorRun {
    std::vector<double> estimates_hz;
    double mean_err_hz = 0.0;
    double std_hz = 0.0;
    double snr_e = 0.0;
    double model_std_hz = 0.0;  // NaN outside the model's domain
    double p_exceed = 0.0;      // fraction with |f_hat - cfo| > exceed_threshold_hz
};

/// Repeated estimation of a fixed offset through the channel. snr_db is the
/// per-sample channel SNR.
EstimatorRun run_estimator_trials(const EstimatorSpec& spec, const Numerology& numerology, double cfo_hz,
                                  double snr_db, std::size_t trials, std::uint64_t seed,
                                  unsigned threads = 0, double exceed_threshold_hz = 300.0);

struct Histogram {
    std::vector<double> edges;  // counts.size() + 1 entries
    std::vector<std::size_t> counts;
    std::vector<double> model_density;  // Gaussian pdf at each bin centre, 1/Hz
};

/// Bins aligned to multiples of bin_width_hz covering the samples, with the
/// Gaussian model N(model_mean, model_std^2) evaluated at the bin centres.
/// Throws TooFewSamples below 100 samples.
Histogram histogram(const std::vector<double>& samples, double bin_width_hz, double model_mean_hz,
                    double model_std_hz);

struct ChiSquareResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 0.0;
    std::size_t samples_in_range = 0;
};

/// Pearson goodness of fit of the samples inside mean +/- half_width_sigmas*std
/// against the Gaussian shape over the same range, bins of std/bins_per_sigma.
/// Expected counts are normalised to the in-range sample count.
ChiSquareResult chi_square_gaussian(const std::vector<double>& samples, double mean, double std,
                                    double half_width_sigmas = 3.0, std::size_t bins_per_sigma = 2);

void write_sweep_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_histogram_csv(std::ostream& out, const Histogram& hist);

}  // namespace cfo::linksim
