#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cfo/analysis.hpp"
#include "cfo/channel.hpp"
#include "cfo/error.hpp"
#include "cfo/linksim.hpp"
#include "cfo/scheme.hpp"
#include "test_util.hpp"

using namespace cfo;

namespace {

struct Frame {
    ResourceGrid grid;
    PilotMap pilots;
};

Frame make_frame(const TwoStepConfig& cfg, std::uint64_t seed) {
    Frame f{test::random_qpsk_grid(cfg.numerology, cfg.n_symbols, seed), make_pilot_sequence(cfg.pilot_layout)};
    for (const auto& [key, v] : f.pilots) f.grid(key.first, key.second) = v;
    return f;
}

}  // namespace

TEST_SUITE("scheme") {

TEST_CASE("noiseless two-step round trip") {
    const TwoStepConfig cfg;
    const auto frame = make_frame(cfg, 1);
    const auto tx = ofdm_modulate(frame.grid);

    const auto r = run_two_step(apply_cfo(tx, 3000.0), cfg, frame.pilots);
    REQUIRE(r.f_coarse_hz.has_value());
    REQUIRE(r.f_residual_hz.has_value());
    CHECK(std::abs(r.f_total_hz - 3000.0) < 1.0);
    CHECK(r.f_total_hz == *r.f_coarse_hz + *r.f_residual_hz);
    CHECK(r.compensated_grid.n_symbols() == cfg.n_symbols);
    CHECK(test::max_abs_diff(r.compensated_grid.data(), frame.grid.data()) < 1e-6);
    REQUIRE(r.diagnostics.size() == 2);
    CHECK(r.diagnostics[0].stage == "coarse");
    CHECK(r.diagnostics[1].stage == "residual");

    const auto z = run_two_step(tx, cfg, frame.pilots);
    CHECK(std::abs(*z.f_coarse_hz) < 1e-9);
    CHECK(std::abs(*z.f_residual_hz) < 1e-9);
    CHECK(test::max_abs_diff(z.compensated_grid.data(), frame.grid.data()) < 1e-9);
}

TEST_CASE("residual stage alone aliases a large offset") {
    TwoStepConfig cfg;
    cfg.enable_coarse = false;
    const auto frame = make_frame(cfg, 2);
    const auto r = run_two_step(apply_cfo(ofdm_modulate(frame.grid), 3000.0), cfg, frame.pilots);
    CHECK_FALSE(r.f_coarse_hz.has_value());
    REQUIRE(r.f_residual_hz.has_value());
    CHECK(std::abs(r.f_total_hz - 3000.0) >= 1000.0);
    // 3000 Hz wraps by one period of the residual estimator.
    const double period = 1.0 / pilot_estimator_spec(cfg.numerology, cfg.pilot_layout).delta_t_s;
    CHECK(std::abs(r.f_total_hz - (3000.0 - period)) < 100.0);
}

TEST_CASE("disabled residual stage reproduces the coarse estimator") {
    TwoStepConfig cfg;
    cfg.enable_residual = false;
    const auto frame = make_frame(cfg, 3);
    const auto rx = transmit(ofdm_modulate(frame.grid), ChannelConfig{850.0, 0.4, 1.0, 8.0, 12});

    const auto r = run_two_step(rx, cfg, frame.pilots);
    const double f = estimate_cp(rx, cfg.numerology, cfg.n_symbols).f_hat_hz;
    CHECK(r.f_coarse_hz == f);
    CHECK_FALSE(r.f_residual_hz.has_value());
    CHECK(r.f_total_hz == f);
    CHECK(r.compensated_grid.data() == ofdm_demodulate(compensate(rx, f), cfg.numerology, cfg.n_symbols).data());
    CHECK(r.diagnostics.size() == 1);
}

TEST_CASE("zero pilot correlation is recorded, not raised") {
    TwoStepConfig cfg;
    cfg.enable_coarse = false;
    const auto frame = make_frame(cfg, 4);
    // A silent block demodulates to an exactly zero grid.
    const TimeSignal silent{std::vector<cplx>(cfg.n_symbols * cfg.numerology.symbol_len()),
                            cfg.numerology.sample_rate_hz()};
    const auto r = run_two_step(silent, cfg, frame.pilots);
    CHECK_FALSE(r.f_residual_hz.has_value());
    REQUIRE(r.diagnostics.size() == 1);
    CHECK(r.diagnostics[0].skipped);
    CHECK(r.f_total_hz == 0.0);
}

TEST_CASE("config validation") {
    TwoStepConfig none;
    none.enable_coarse = none.enable_residual = false;
    CHECK_THROWS_AS(validate(none), Error);
    TwoStepConfig short_block;
    short_block.n_symbols = 4;
    CHECK_THROWS_AS(validate(short_block), Error);
    short_block.enable_residual = false;
    CHECK_NOTHROW(validate(short_block));

    const TwoStepConfig cfg;
    const TimeSignal too_short{std::vector<cplx>(100, 1.0), cfg.numerology.sample_rate_hz()};
    try {
        (void)run_two_step(too_short, cfg, {});
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InsufficientSamples);
    }
}

TEST_CASE("predict_final_error_std") {
    const TwoStepConfig cfg;
    const auto spec = pilot_estimator_spec(cfg.numerology, cfg.pilot_layout);
    const double raw = analysis::raw_snr_for_effective(EstimatorKind::pilot, 10.0, spec.n_pairs);
    const double sd = predict_final_error_std(cfg, raw);
    CHECK(std::abs(sd - 180.5) < 0.5);
    CHECK(sd == doctest::Approx(std::sqrt(analysis::cfo_variance({10.0, spec.delta_t_s, 0.0}))).epsilon(1e-12));
    // Scaled to the 285.716 us spacing the same snr_e gives 180.501 Hz.
    CHECK(sd * spec.delta_t_s / 285.716e-6 == doctest::Approx(180.501).epsilon(1e-5));

    CHECK(predict_final_error_std(cfg, 1e12) < 1e-3);

    TwoStepConfig one = cfg;
    one.enable_residual = false;
    try {
        (void)predict_final_error_std(one, 10.0);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::StageDisabled);
    }
}

TEST_CASE("Monte Carlo final error matches the residual-stage model") {
    linksim::TrialConfig tc;
    tc.cfo_hz = 700.0;
    // Coarse std about a fifth of the residual range. Closer to the third
    // (0 dB here) occasional aliased trials already push the std 20% over.
    tc.snr_db = 2.0;
    tc.trials = 10'000;
    tc.seed = 99;
    const auto scheme = tc.scheme_config();
    const double raw = analysis::from_db(tc.snr_db);
    const double range = analysis::estimation_range(pilot_estimator_spec(scheme.numerology, scheme.pilot_layout).delta_t_s);
    REQUIRE(predict_coarse_error_std(scheme, raw) <= range / 3.0);

    const auto records = linksim::run_trials(tc);
    const auto row = linksim::summarize(tc, records);
    const double model = predict_final_error_std(scheme, raw);
    INFO("empirical ", row.std_err_hz, " model ", model);
    CHECK(std::abs(row.std_err_hz - model) / model < 0.2);

    std::size_t outside = 0;
    for (const auto& r : records)
        if (std::abs(r.final_error_hz) > 3.0 * model) ++outside;
    CHECK(static_cast<double>(outside) / static_cast<double>(records.size()) < 0.01);
}

TEST_CASE("two-step is never worse than coarse-only at the 90th percentile") {
    // Restricted to where the coarse error stays well inside the residual range;
    // below that the residual stage aliases and can add a full period.
    for (double snr : {0.0, 5.0, 15.0, 25.0})
        for (double f : {0.0, 700.0, 3000.0, 6000.0}) {
            linksim::TrialConfig tc;
            tc.cfo_hz = f;
            tc.snr_db = snr;
            tc.trials = 1000;
            tc.seed = 7;
            const auto two = linksim::summarize(tc, linksim::run_trials(tc));
            tc.mode = linksim::SchemeMode::coarse_only;
            const auto coarse = linksim::summarize(tc, linksim::run_trials(tc));
            INFO("snr ", snr, " f ", f, " two ", two.p90_abs_err_hz, " coarse ", coarse.p90_abs_err_hz);
            CHECK(two.p90_abs_err_hz <= coarse.p90_abs_err_hz);
        }
}

}  // TEST_SUITE
