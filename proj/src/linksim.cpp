#include "cfo/linksim.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "cfo/analysis.hpp"
#include "cfo/channel.hpp"
#include "cfo/error.hpp"

namespace cfo::linksim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

cplx random_qpsk(std::mt19937_64& rng) {
    const auto bits = rng();
    return qpsk_symbol(static_cast<int>(bits & 1U), static_cast<int>((bits >> 1) & 1U));
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    return fmt::format("{}", v);
}

}  // namespace

std::string_view to_string(SchemeMode mode) noexcept {
    switch (mode) {
        case SchemeMode::two_step: return "two_step";
        case SchemeMode::coarse_only: return "coarse_only";
        case SchemeMode::residual_only: return "residual_only";
    }
    return "?";
}

SchemeMode parse_scheme_mode(std::string_view name) {
    if (name == "two_step") return SchemeMode::two_step;
    if (name == "coarse_only") return SchemeMode::coarse_only;
    if (name == "residual_only") return SchemeMode::residual_only;
    throw Error(ErrorKind::InvalidArgument, "unknown mode '" + std::string(name) + "'");
}

std::size_t TrialConfig::frame_symbols() const {
    return std::max(block_symbols, pilot_layout.pilot_symbol_indices.second + 1);
}

TwoStepConfig TrialConfig::scheme_config() const {
    TwoStepConfig cfg;
    cfg.numerology = numerology;
    cfg.pilot_layout = pilot_layout;
    cfg.n_symbols = frame_symbols();
    cfg.enable_coarse = mode != SchemeMode::residual_only;
    cfg.enable_residual = mode != SchemeMode::coarse_only;
    return cfg;
}

void validate(const TrialConfig& cfg) {
    if (cfg.trials == 0) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
    if (cfg.repetition == 0 || cfg.repetition % 2 == 0)
        throw Error(ErrorKind::InvalidArgument, "repetition must be odd");
    if (cfg.payload_bits == 0) throw Error(ErrorKind::InvalidArgument, "payload must not be empty");
    if (cfg.block_symbols == 0) throw Error(ErrorKind::InvalidArgument, "block must not be empty");
    if (!std::isfinite(cfg.cfo_hz)) throw Error(ErrorKind::InvalidArgument, "offset must be finite");
    validate(cfg.pilot_layout, cfg.numerology.n_fft());

    std::size_t capacity = 0;
    for (std::size_t s = 0; s < cfg.block_symbols; ++s)
        for (std::size_t k = 0; k < cfg.numerology.n_fft(); ++k)
            if (!cfg.pilot_layout.is_pilot(s, k)) ++capacity;
    if (cfg.payload_bits * cfg.repetition > 2 * capacity)
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("{} coded bits exceed block capacity of {}", cfg.payload_bits * cfg.repetition,
                                2 * capacity));
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
    return splitmix64(splitmix64(master_seed) ^ trial_index);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<PilotKey> payload_positions(const PilotLayout& layout, std::size_t grid_width,
                                        std::size_t payload_bits, std::size_t repetition) {
    const std::size_t needed = (payload_bits * repetition + 1) / 2;
    std::vector<PilotKey> out;
    out.reserve(needed);
    for (std::size_t s = 0; out.size() < needed; ++s)
        for (std::size_t k = 0; k < grid_width && out.size() < needed; ++k)
            if (!layout.is_pilot(s, k)) out.emplace_back(s, k);
    return out;
}

std::vector<std::uint8_t> scrambling_sequence(std::size_t length, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x5C4A'B1E5ULL));
    std::vector<std::uint8_t> out(length);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng() & 1U);
    return out;
}

TransmitFrame build_frame(const TrialConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t width = cfg.numerology.n_fft();

    TransmitFrame frame{ResourceGrid(cfg.numerology, cfg.frame_symbols()), make_pilot_sequence(cfg.pilot_layout),
                        std::vector<std::uint8_t>(cfg.payload_bits)};
    for (auto& b : frame.bits) b = static_cast<std::uint8_t>(rng() & 1U);

    // Copy r of bit b sits at coded index r * payload_bits + b, so the copies
    // of one bit are spread across the whole block.
    std::vector<std::uint8_t> coded(cfg.payload_bits * cfg.repetition + 1, 0);
    for (std::size_t r = 0; r < cfg.repetition; ++r)
        for (std::size_t b = 0; b < cfg.payload_bits; ++b) coded[r * cfg.payload_bits + b] = frame.bits[b];
    // Without scrambling the repeated copies are periodic across subcarriers
    // and the time signal turns peaky.
    const auto scramble = scrambling_sequence(coded.size(), cfg.pilot_layout.seed);
    for (std::size_t i = 0; i < coded.size(); ++i) coded[i] ^= scramble[i];

    std::vector<bool> used(frame.grid.n_symbols() * width, false);
    const auto positions = payload_positions(cfg.pilot_layout, width, cfg.payload_bits, cfg.repetition);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto [s, k] = positions[i];
        frame.grid(s, k) = qpsk_symbol(coded[2 * i], coded[2 * i + 1]);
        used[s * width + k] = true;
    }
    for (const auto& [key, value] : frame.pilots) {
        frame.grid(key.first, key.second) = value;
        used[key.first * width + key.second] = true;
    }
    for (std::size_t s = 0; s < frame.grid.n_symbols(); ++s)
        for (std::size_t k = 0; k < width; ++k)
            if (!used[s * width + k]) frame.grid(s, k) = random_qpsk(rng);
    return frame;
}

DecodeResult decode_block(const ResourceGrid& grid, const PilotMap& pilots, const PilotLayout& layout,
                          std::size_t payload_bits, std::size_t repetition,
                          const std::vector<std::uint8_t>& reference_bits) {
    if (repetition == 0 || repetition % 2 == 0) throw Error(ErrorKind::InvalidArgument, "repetition must be odd");
    if (reference_bits.size() != payload_bits)
        throw Error(ErrorKind::LengthMismatch, "reference bits do not match payload size");
    const auto [first, second] = layout.pilot_symbol_indices;
    if (second >= grid.n_symbols() || layout.pilot_subcarriers.empty())
        throw Error(ErrorKind::MissingPilots, "grid does not contain the pilot symbols");

    cplx gain{};
    std::size_t n_pilots = 0;
    for (std::size_t symbol : {first, second}) {
        for (std::size_t k : layout.pilot_subcarriers) {
            const auto it = pilots.find({symbol, k});
            if (it == pilots.end() || k >= grid.n_subcarriers() || it->second == cplx{})
                throw Error(ErrorKind::MissingPilots, "no known pilot value at subcarrier " + std::to_string(k));
            gain += grid(symbol, k) / it->second;
            ++n_pilots;
        }
    }
    gain /= static_cast<double>(n_pilots);
    if (gain == cplx{}) gain = cplx{1.0, 0.0};

    const auto positions = payload_positions(layout, grid.n_subcarriers(), payload_bits, repetition);
    if (!positions.empty() && positions.back().first >= grid.n_symbols())
        throw Error(ErrorKind::InsufficientSamples, "grid too small for the payload");

    const auto scramble = scrambling_sequence(2 * positions.size(), layout.seed);
    std::vector<std::uint8_t> coded(2 * positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const cplx z = grid(positions[i].first, positions[i].second) / gain;
        coded[2 * i] = (z.real() < 0.0) ^ scramble[2 * i];
        coded[2 * i + 1] = (z.imag() < 0.0) ^ scramble[2 * i + 1];
    }

    DecodeResult result;
    result.bits.resize(payload_bits);
    for (std::size_t b = 0; b < payload_bits; ++b) {
        std::size_t ones = 0;
        for (std::size_t r = 0; r < repetition; ++r) ones += coded[r * payload_bits + b];
        result.bits[b] = ones * 2 > repetition;
        if (result.bits[b] != reference_bits[b]) ++result.bit_errors;
    }
    result.decode_ok = result.bit_errors == 0;
    return result;
}

TrialRecord run_trial(const TrialConfig& cfg, std::size_t trial_index) {
    std::mt19937_64 rng(trial_seed(cfg.seed, trial_index));
    const auto frame = build_frame(cfg, rng());
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    ChannelConfig channel;
    channel.cfo_hz = cfg.cfo_hz;
    channel.phase_rad = phase(rng);
    channel.snr_db = cfg.snr_db;
    channel.seed = rng();
    const TimeSignal rx = transmit(ofdm_modulate(frame.grid), channel);

    const auto result = run_two_step(rx, cfg.scheme_config(), frame.pilots);
    const auto decoded =
        decode_block(result.compensated_grid, frame.pilots, cfg.pilot_layout, cfg.payload_bits, cfg.repetition,
                     frame.bits);

    TrialRecord rec;
    rec.trial_index = trial_index;
    rec.f_coarse_hz = result.f_coarse_hz.value_or(kNaN);
    rec.f_residual_hz = result.f_residual_hz.value_or(kNaN);
    rec.final_error_hz = cfg.cfo_hz - result.f_total_hz;
    rec.bit_errors = decoded.bit_errors;
    rec.decode_ok = decoded.decode_ok;
    return rec;
}

std::vector<TrialRecord> run_trials(const TrialConfig& cfg) {
    validate(cfg);
    std::vector<TrialRecord> records(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t i) { records[i] = run_trial(cfg, i); });
    return records;
}

double model_error_std(const TrialConfig& cfg) {
    if (std::isinf(cfg.snr_db)) return 0.0;
    const double raw = analysis::from_db(cfg.snr_db);
    auto scheme = cfg.scheme_config();
    switch (cfg.mode) {
        case SchemeMode::two_step: return predict_final_error_std(scheme, raw);
        case SchemeMode::coarse_only: return predict_coarse_error_std(scheme, raw);
        case SchemeMode::residual_only:
            scheme.enable_coarse = true;
            return predict_final_error_std(scheme, raw);
    }
    return kNaN;
}

SummaryRow summarize(const TrialConfig& cfg, const std::vector<TrialRecord>& records) {
    SummaryRow row;
    row.snr_db = cfg.snr_db;
    row.cfo_hz = cfg.cfo_hz;
    row.mode = cfg.mode;
    row.trials = records.size();

    std::vector<double> errors;
    errors.reserve(records.size());
    std::size_t ok = 0, exceed = 0;
    for (const auto& r : records) {
        errors.push_back(r.final_error_hz);
        if (r.decode_ok) ++ok;
        if (std::abs(r.final_error_hz) > 300.0) ++exceed;
    }
    row.mean_err_hz = mean_of(errors);
    row.std_err_hz = sample_std(errors, row.mean_err_hz);
    row.model_std_hz = model_error_std(cfg);
    if (!records.empty()) {
        const double n = static_cast<double>(records.size());
        row.p_exceed_300 = static_cast<double>(exceed) / n;
        row.decode_rate = static_cast<double>(ok) / n;
        std::vector<double> abs_err(errors.size());
        std::transform(errors.begin(), errors.end(), abs_err.begin(), [](double e) { return std::abs(e); });
        const auto k = static_cast<std::size_t>(std::ceil(0.9 * n)) - 1;
        std::nth_element(abs_err.begin(), abs_err.begin() + static_cast<std::ptrdiff_t>(k), abs_err.end());
        row.p90_abs_err_hz = abs_err[k];
    }
    const auto ci = wilson_interval(ok, records.size());
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
    return row;
}

std::vector<SummaryRow> run_decode_sweep(const TrialConfig& cfg, const std::vector<double>& snr_grid_db) {
    std::vector<SummaryRow> rows;
    rows.reserve(snr_grid_db.size());
    for (double snr : snr_grid_db) {
        TrialConfig point = cfg;
        point.snr_db = snr;
        rows.push_back(summarize(point, run_trials(point)));
    }
    return rows;
}

Interval wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

EstimatorRun run_estimator_trials(const EstimatorSpec& spec, const Numerology& numerology, double cfo_hz,
                                  double snr_db, std::size_t trials, std::uint64_t seed, unsigned threads,
                                  double exceed_threshold_hz) {
    if (trials == 0) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
    if (!(spec.delta_t_s > 0.0) || spec.n_pairs == 0)
        throw Error(ErrorKind::InvalidArgument, "invalid estimator spec");

    const TimeSignal preamble = spec.kind == EstimatorKind::preamble ? make_preamble(numerology, spec.preamble_seed)
                                                                     : TimeSignal{};
    const PilotMap pilots =
        spec.kind == EstimatorKind::pilot ? make_pilot_sequence(spec.pilot_layout) : PilotMap{};

    EstimatorRun run;
    run.estimates_hz.resize(trials);
    parallel_for(trials, threads, [&](std::size_t i) {
        std::mt19937_64 rng(trial_seed(seed, i));
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

        TimeSignal tx;
        if (spec.kind == EstimatorKind::preamble) {
            tx = preamble;
        } else {
            ResourceGrid grid(numerology, spec.n_symbols);
            for (std::size_t s = 0; s < grid.n_symbols(); ++s)
                for (std::size_t k = 0; k < grid.n_subcarriers(); ++k) grid(s, k) = random_qpsk(rng);
            for (const auto& [key, value] : pilots) grid(key.first, key.second) = value;
            tx = ofdm_modulate(grid);
        }

        ChannelConfig channel;
        channel.cfo_hz = cfo_hz;
        channel.phase_rad = phase(rng);
        channel.snr_db = snr_db;
        channel.seed = rng();
        const TimeSignal rx = transmit(tx, channel);

        switch (spec.kind) {
            case EstimatorKind::cp: run.estimates_hz[i] = estimate_cp(rx, numerology, spec.n_symbols).f_hat_hz; break;
            case EstimatorKind::preamble: run.estimates_hz[i] = estimate_preamble(rx, preamble).f_hat_hz; break;
            case EstimatorKind::pilot: {
                const auto grid = ofdm_demodulate(rx, numerology, spec.n_symbols);
                run.estimates_hz[i] = estimate_pilot(grid, spec.pilot_layout, pilots, numerology).f_hat_hz;
                break;
            }
        }
    });

    std::vector<double> errors(trials);
    std::size_t exceed = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        errors[i] = run.estimates_hz[i] - cfo_hz;
        if (std::abs(errors[i]) > exceed_threshold_hz) ++exceed;
    }
    run.mean_err_hz = mean_of(errors);
    run.std_hz = sample_std(errors, run.mean_err_hz);
    run.p_exceed = static_cast<double>(exceed) / static_cast<double>(trials);

    if (std::isinf(snr_db) && snr_db > 0.0) {
        run.snr_e = std::numeric_limits<double>::infinity();
        run.model_std_hz = 0.0;
    } else {
        run.snr_e = analysis::estimator_effective_snr(spec.kind, analysis::from_db(snr_db), spec.n_pairs);
        try {
            run.model_std_hz = std::sqrt(analysis::cfo_variance({run.snr_e, spec.delta_t_s, cfo_hz}));
        } catch (const Error&) {
            run.model_std_hz = kNaN;
        }
    }
    return run;
}

Histogram histogram(const std::vector<double>& samples, double bin_width_hz, double model_mean_hz,
                    double model_std_hz) {
    if (samples.size() < 100) throw Error(ErrorKind::TooFewSamples, "histogram needs at least 100 samples");
    if (!(bin_width_hz > 0.0)) throw Error(ErrorKind::InvalidArgument, "bin width must be positive");

    const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = std::floor(*min_it / bin_width_hz);
    const double hi = std::floor(*max_it / bin_width_hz);
    const auto n_bins = static_cast<std::size_t>(hi - lo) + 1;

    Histogram h;
    h.counts.assign(n_bins, 0);
    for (std::size_t i = 0; i <= n_bins; ++i) h.edges.push_back((lo + static_cast<double>(i)) * bin_width_hz);
    for (double x : samples) {
        const auto idx = static_cast<std::size_t>(std::floor(x / bin_width_hz) - lo);
        ++h.counts[std::min(idx, n_bins - 1)];
    }
    h.model_density.resize(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        if (!(model_std_hz > 0.0)) {
            h.model_density[i] = kNaN;
            continue;
        }
        const double z = (0.5 * (h.edges[i] + h.edges[i + 1]) - model_mean_hz) / model_std_hz;
        h.model_density[i] = std::exp(-0.5 * z * z) / (model_std_hz * std::sqrt(2.0 * std::numbers::pi));
    }
    return h;
}

ChiSquareResult chi_square_gaussian(const std::vector<double>& samples, double mean, double std,
                                    double half_width_sigmas, std::size_t bins_per_sigma) {
    if (!(std > 0.0) || bins_per_sigma == 0 || !(half_width_sigmas > 0.0))
        throw Error(ErrorKind::InvalidArgument, "invalid chi-square binning");
    const auto n_bins = static_cast<std::size_t>(std::llround(2.0 * half_width_sigmas * static_cast<double>(bins_per_sigma)));
    const double width = 1.0 / static_cast<double>(bins_per_sigma);  // in sigmas

    std::vector<std::size_t> counts(n_bins, 0);
    std::size_t in_range = 0;
    for (double x : samples) {
        const double z = (x - mean) / std + half_width_sigmas;
        if (z < 0.0 || z >= 2.0 * half_width_sigmas) continue;
        ++counts[std::min(static_cast<std::size_t>(z / width), n_bins - 1)];
        ++in_range;
    }

    std::vector<double> prob(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double a = -half_width_sigmas + static_cast<double>(i) * width;
        prob[i] = normal_cdf(a + width) - normal_cdf(a);
    }
    const double total = std::accumulate(prob.begin(), prob.end(), 0.0);

    ChiSquareResult res;
    res.samples_in_range = in_range;
    res.dof = n_bins - 1;
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double expected = static_cast<double>(in_range) * prob[i] / total;
        const double d = static_cast<double>(counts[i]) - expected;
        res.statistic += d * d / expected;
    }
    const boost::math::chi_squared dist(static_cast<double>(res.dof));
    res.p_value = boost::math::cdf(boost::math::complement(dist, res.statistic));
    return res;
}

void write_sweep_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "snr_db,cfo_hz,mode,mean_err_hz,std_err_hz,model_std_hz,p_exceed_300,decode_rate,ci_lo,ci_hi,trials\n";
    for (const auto& r : rows) {
        out << num(r.snr_db) << ',' << num(r.cfo_hz) << ',' << to_string(r.mode) << ',' << num(r.mean_err_hz) << ','
            << num(r.std_err_hz) << ',' << num(r.model_std_hz) << ',' << num(r.p_exceed_300) << ','
            << num(r.decode_rate) << ',' << num(r.ci_lo) << ',' << num(r.ci_hi) << ',' << r.trials << '\n';
    }
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
    out << "bin_lo_hz,bin_hi_hz,count,model_density\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
        out << num(hist.edges[i]) << ',' << num(hist.edges[i + 1]) << ',' << hist.counts[i] << ','
            << num(hist.model_density[i]) << '\n';
}

}  // namespace cfo::linksim
