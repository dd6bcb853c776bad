#include "cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "cfo/analysis.hpp"
#include "cfo/channel.hpp"
#include "cfo/error.hpp"
#include "cfo/estimators.hpp"
#include "cfo/linksim.hpp"

#ifndef CFO_VERSION
#define CFO_VERSION "0.0.0"
#endif

namespace cfo::cli {
namespace {

using json = nlohmann::json;
namespace an = cfo::analysis;
namespace ls = cfo::linksim;

constexpr const char* kSweepSchema = "cfo-sweep/1";
constexpr const char* kHistogramSchema = "cfo-histogram/1";
constexpr const char* kCriterionSchema = "cfo-criterion/1";

struct Grid {
    std::string text;
    std::vector<double> values;
};

Grid parse_grid(const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidArgument, "grid '" + text + "' is not LO:HI:STEP");
        }
    }
    if (parts.size() != 3) throw Error(ErrorKind::InvalidArgument, "grid '" + text + "' is not LO:HI:STEP");
    const double lo = parts[0], hi = parts[1], step = parts[2];
    if (!(step > 0.0) || hi < lo || !std::isfinite(lo) || !std::isfinite(hi))
        throw Error(ErrorKind::InvalidArgument, "grid '" + text + "' needs LO <= HI and STEP > 0");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    if (n > 100'000) throw Error(ErrorKind::InvalidArgument, "grid '" + text + "' has too many points");
    Grid g{text, {}};
    for (std::size_t i = 0; i < n; ++i) g.values.push_back(lo + static_cast<double>(i) * step);
    return g;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
    return f;
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

void write_manifest(const std::string& subcommand, const json& parameters, const std::vector<std::string>& argv,
                    std::uint64_t seed, const std::string& out_path, const std::string& schema,
                    const std::vector<std::string>& columns) {
    json m;
    m["subcommand"] = subcommand;
    m["parameters"] = parameters;
    m["argv"] = argv;
    m["seed"] = seed;
    m["version"] = CFO_VERSION;
    m["outputs"] = json::array({{{"path", out_path}, {"fnv1a64", file_digest(out_path)}}});
    m["csv_schema"] = {{"name", schema}, {"columns", columns}};
    auto f = open_output(manifest_path(out_path));
    f << m.dump(2) << '\n';
}

json numerology_json(const Numerology& n) {
    return {{"scs_hz", n.scs_hz()}, {"n_fft", n.n_fft()}, {"cp_len", n.cp_len()}};
}

struct NumerologyFlags {
    double scs_hz = 15000.0;
    std::size_t n_fft = 128;
    std::size_t cp_len = 9;

    void add(CLI::App* app) {
        app->add_option("--scs-hz", scs_hz, "Subcarrier spacing")->capture_default_str();
        app->add_option("--n-fft", n_fft, "DFT size (power of two)")->capture_default_str();
        app->add_option("--cp-len", cp_len, "Cyclic prefix length in samples")->capture_default_str();
    }
    Numerology make() const { return Numerology(scs_hz, n_fft, cp_len); }
};

struct HistogramCmd {
    std::string estimator;
    std::optional<double> snr_db;
    std::optional<double> effective_snr_db;
    double cfo_hz = 0.0;
    std::size_t trials = 20000;
    std::uint64_t seed = 1;
    std::string out;
    std::optional<double> bin_width_hz;
    std::size_t n_symbols = 5;
    std::size_t pilot_spacing = 6;
    unsigned threads = 0;
    NumerologyFlags num;

    CLI::App* add(CLI::App& app) {
        auto* c = app.add_subcommand("histogram", "Histogram of repeated offset estimates with the model density");
        c->add_option("--estimator", estimator, "cp, preamble or pilot")
            ->required()
            ->check(CLI::IsMember({"cp", "preamble", "pilot"}));
        auto* s = c->add_option("--snr-db", snr_db, "Per-sample channel SNR (inf for no noise)");
        auto* e = c->add_option("--effective-snr-db", effective_snr_db, "Target SNR after the estimator instead");
        s->excludes(e);
        c->add_option("--cfo-hz", cfo_hz, "True offset")->capture_default_str();
        c->add_option("--trials", trials, "Number of trials")->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--seed", seed, "Master seed")->capture_default_str();
        c->add_option("--out", out, "Histogram CSV path")->required();
        c->add_option("--bin-width-hz", bin_width_hz, "Bin width (default: model std / 4)")
            ->check(CLI::PositiveNumber);
        c->add_option("--n-symbols", n_symbols, "Symbols in the CP block")->capture_default_str();
        c->add_option("--pilot-spacing", pilot_spacing, "Pilot subcarrier spacing")->capture_default_str();
        c->add_option("--threads", threads, "Worker threads, 0 = all cores")->capture_default_str();
        num.add(c);
        return c;
    }

    int run(const std::vector<std::string>& argv, std::ostream& out_stream) const {
        if (snr_db.has_value() == effective_snr_db.has_value())
            throw Error(ErrorKind::InvalidArgument, "give exactly one of --snr-db and --effective-snr-db");
        const Numerology numerology = num.make();
        EstimatorSpec spec;
        switch (parse_estimator_kind(estimator)) {
            case EstimatorKind::cp: spec = cp_estimator_spec(numerology, n_symbols); break;
            case EstimatorKind::preamble: spec = preamble_estimator_spec(numerology); break;
            case EstimatorKind::pilot: {
                spec = pilot_estimator_spec(numerology, default_pilot_layout(numerology, pilot_spacing));
                break;
            }
        }
        const double channel_snr_db =
            snr_db ? *snr_db
                   : an::to_db(an::raw_snr_for_effective(spec.kind, an::from_db(*effective_snr_db), spec.n_pairs));

        const auto run = ls::run_estimator_trials(spec, numerology, cfo_hz, channel_snr_db, trials, seed, threads);
        const double width = bin_width_hz                                   ? *bin_width_hz
                             : std::isfinite(run.model_std_hz) && run.model_std_hz > 0.0 ? run.model_std_hz / 4.0
                                                                                           : 1.0;
        const auto hist = ls::histogram(run.estimates_hz, width, cfo_hz, run.model_std_hz);
        {
            auto f = open_output(out);
            ls::write_histogram_csv(f, hist);
        }

        json params = {{"estimator", estimator},
                       {"snr_db", channel_snr_db},
                       {"cfo_hz", cfo_hz},
                       {"trials", trials},
                       {"bin_width_hz", width},
                       {"n_symbols", spec.n_symbols},
                       {"pilot_spacing", pilot_spacing},
                       {"delta_t_s", spec.delta_t_s},
                       {"n_pairs", spec.n_pairs},
                       {"numerology", numerology_json(numerology)}};
        if (effective_snr_db) params["effective_snr_db"] = *effective_snr_db;
        write_manifest("histogram", params, argv, seed, out, kHistogramSchema,
                       {"bin_lo_hz", "bin_hi_hz", "count", "model_density"});

        fmt::print(out_stream, "estimator {}  delta_t {:.3f} us  pairs {}\n", estimator, spec.delta_t_s * 1e6,
                   spec.n_pairs);
        fmt::print(out_stream, "channel snr {:.4f} dB  effective snr {:.4f} dB\n", channel_snr_db,
                   an::to_db(run.snr_e));
        fmt::print(out_stream, "mean error {:.3f} Hz  std {:.3f} Hz  model std {:.3f} Hz\n", run.mean_err_hz,
                   run.std_hz, run.model_std_hz);
        fmt::print(out_stream, "{} bins of {:.4g} Hz written to {}\n", hist.counts.size(), width, out);
        return 0;
    }
};

struct CriterionCmd {
    double pe = 0.1;
    double delta_fmax_hz = 300.0;
    double delta_t_us = 0.0;
    bool solve = false;
    std::string grid = "0:30:2";
    std::string out;

    CLI::App* add(CLI::App& app) {
        auto* c = app.add_subcommand("criterion", "Decoding criterion: tolerable error bound or minimum SNR");
        c->add_option("--pe", pe, "Target decoding error probability")->required();
        c->add_option("--delta-fmax-hz", delta_fmax_hz, "Tolerable offset error")->required();
        c->add_option("--delta-t-us", delta_t_us, "Estimator measurement interval")->required();
        c->add_flag("--solve-min-snr", solve, "Print the minimum effective SNR instead of a table");
        c->add_option("--snr-db-grid", grid, "Effective SNR grid LO:HI:STEP")->capture_default_str();
        c->add_option("--out", out, "Optional CSV of the table");
        return c;
    }

    int run(const std::vector<std::string>& argv, std::ostream& o) const {
        const double dt = delta_t_us * 1e-6;
        if (!(pe > 0.0 && pe < 1.0)) throw Error(ErrorKind::DomainError, "--pe must lie in (0, 1)");
        if (!(delta_fmax_hz > 0.0)) throw Error(ErrorKind::DomainError, "--delta-fmax-hz must be positive");
        if (!(dt > 0.0)) throw Error(ErrorKind::DomainError, "--delta-t-us must be positive");

        if (solve) {
            const double s = an::min_snr_for_target(pe, delta_fmax_hz, dt);
            fmt::print(o, "min_snr_db {:.4f}\n", an::to_db(s));
            fmt::print(o, "min_snr_linear {:.6g}\n", s);
            fmt::print(o, "range_hz {:.3f}\n", an::estimation_range(dt));
            return 0;
        }

        const Grid g = parse_grid(grid);
        std::ostringstream csv;
        csv << "snr_db,max_error_hz,satisfied\n";
        fmt::print(o, "{:>10} {:>14} {:>10}\n", "snr_db", "max_error_hz", "satisfied");
        for (double db : g.values) {
            const double e = an::max_error_at_confidence(pe, dt, an::from_db(db));
            const bool ok = e <= delta_fmax_hz;
            fmt::print(o, "{:>10.3f} {:>14.3f} {:>10}\n", db, e, ok ? "yes" : "no");
            csv << fmt::format("{},{},{}\n", db, e, ok ? 1 : 0);
        }
        if (!out.empty()) {
            {
                auto f = open_output(out);
                f << csv.str();
            }
            write_manifest("criterion",
                           {{"pe", pe}, {"delta_fmax_hz", delta_fmax_hz}, {"delta_t_us", delta_t_us},
                            {"snr_db_grid", grid}},
                           argv, 0, out, kCriterionSchema, {"snr_db", "max_error_hz", "satisfied"});
        }
        return 0;
    }
};

struct SweepCmd {
    std::string mode = "two_step";
    double cfo_hz = 0.0;
    std::string grid;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::string out;
    unsigned threads = 0;
    std::size_t payload_bits = 40;
    std::size_t repetition = 21;
    NumerologyFlags num;

    CLI::App* add(CLI::App& app) {
        auto* c = app.add_subcommand("sweep", "Decode success rate over an SNR grid");
        c->add_option("--mode", mode, "two_step, coarse_only or residual_only")
            ->capture_default_str()
            ->check(CLI::IsMember({"two_step", "coarse_only", "residual_only"}));
        c->add_option("--cfo-hz", cfo_hz, "True offset")->capture_default_str();
        c->add_option("--snr-db-grid", grid, "Channel SNR grid LO:HI:STEP (use = for a negative LO)")->required();
        c->add_option("--trials", trials, "Trials per grid point")->capture_default_str()->check(CLI::PositiveNumber);
        c->add_option("--seed", seed, "Master seed")->capture_default_str();
        c->add_option("--out", out, "Sweep CSV path")->required();
        c->add_option("--threads", threads, "Worker threads, 0 = all cores")->capture_default_str();
        c->add_option("--payload-bits", payload_bits, "Payload size")->capture_default_str();
        c->add_option("--repetition", repetition, "Repetition factor (odd)")->capture_default_str();
        num.add(c);
        return c;
    }

    int run(const std::vector<std::string>& argv, std::ostream& o) const {
        const Grid g = parse_grid(grid);
        ls::TrialConfig cfg;
        cfg.numerology = num.make();
        cfg.pilot_layout = default_pilot_layout(cfg.numerology);
        cfg.payload_bits = payload_bits;
        cfg.repetition = repetition;
        cfg.cfo_hz = cfo_hz;
        cfg.mode = ls::parse_scheme_mode(mode);
        cfg.trials = trials;
        cfg.seed = seed;
        cfg.threads = threads;
        ls::validate(cfg);

        const auto rows = ls::run_decode_sweep(cfg, g.values);
        {
            auto f = open_output(out);
            ls::write_sweep_csv(f, rows);
        }
        write_manifest("sweep",
                       {{"mode", mode},
                        {"cfo_hz", cfo_hz},
                        {"snr_db_grid", grid},
                        {"trials", trials},
                        {"payload_bits", payload_bits},
                        {"repetition", repetition},
                        {"numerology", numerology_json(cfg.numerology)}},
                       argv, seed, out, kSweepSchema,
                       {"snr_db", "cfo_hz", "mode", "mean_err_hz", "std_err_hz", "model_std_hz", "p_exceed_300",
                        "decode_rate", "ci_lo", "ci_hi", "trials"});

        fmt::print(o, "{:>8} {:>12} {:>12} {:>12}\n", "snr_db", "decode_rate", "std_err_hz", "model_std_hz");
        for (const auto& r : rows)
            fmt::print(o, "{:>8.2f} {:>12.4f} {:>12.2f} {:>12.2f}\n", r.snr_db, r.decode_rate, r.std_err_hz,
                       r.model_std_hz);
        fmt::print(o, "{} rows written to {}\n", rows.size(), out);
        return 0;
    }
};

struct ReplayCmd {
    std::string manifest;
    std::string out;

    CLI::App* add(CLI::App& app) {
        auto* c = app.add_subcommand("replay", "Re-run a manifest and compare the output bytes");
        c->add_option("--manifest", manifest, "Manifest JSON written next to an output")->required();
        c->add_option("--out", out, "Write to this path instead of the recorded one");
        return c;
    }

    int run(std::ostream& o, std::ostream& err) const {
        std::ifstream f(manifest);
        if (!f) throw std::runtime_error("cannot read '" + manifest + "'");
        const json m = json::parse(f);
        auto args = m.at("argv").get<std::vector<std::string>>();
        if (args.empty() || args.front() == "replay") throw std::runtime_error("manifest has no replayable command");
        const std::string recorded = m.at("outputs").at(0).at("fnv1a64").get<std::string>();

        std::string target = m.at("outputs").at(0).at("path").get<std::string>();
        if (!out.empty()) {
            bool replaced = false;
            for (std::size_t i = 0; i + 1 < args.size(); ++i)
                if (args[i] == "--out") {
                    args[i + 1] = out;
                    replaced = true;
                }
            for (auto& a : args)
                if (a.rfind("--out=", 0) == 0) {
                    a = "--out=" + out;
                    replaced = true;
                }
            if (!replaced) {
                args.push_back("--out");
                args.push_back(out);
            }
            target = out;
        }

        const int code = run_cli(args, o, err);
        if (code != 0) return code;
        const std::string now = file_digest(target);
        if (now != recorded) {
            fmt::print(err, "replay: {} differs from the recorded output ({} vs {})\n", target, now, recorded);
            return 1;
        }
        fmt::print(o, "replay: {} matches the recorded output ({})\n", target, now);
        return 0;
    }
};

}  // namespace

std::string file_digest(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read '" + path + "'");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto it = std::istreambuf_iterator<char>(f); it != std::istreambuf_iterator<char>(); ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Carrier frequency offset estimation experiments", "cfo_tool"};
    app.require_subcommand(1);
    app.set_version_flag("--version", CFO_VERSION);
    app.failure_message(CLI::FailureMessage::help);

    HistogramCmd histogram;
    CriterionCmd criterion;
    SweepCmd sweep;
    ReplayCmd replay;
    auto* h = histogram.add(app);
    auto* c = criterion.add(app);
    auto* s = sweep.add(app);
    auto* r = replay.add(app);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (h->parsed()) return histogram.run(args, out);
        if (c->parsed()) return criterion.run(args, out);
        if (s->parsed()) return sweep.run(args, out);
        if (r->parsed()) return replay.run(out, err);
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        const bool usage = e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::DomainError;
        return usage ? 2 : 1;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return 1;
    }
    return 2;
}

}  // namespace cfo::cli
