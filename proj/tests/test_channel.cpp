#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cfo/channel.hpp"
#include "cfo/error.hpp"
#include "test_util.hpp"

using namespace cfo;

namespace {

TimeSignal unit_signal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * std::numbers::pi);
    TimeSignal s{std::vector<cplx>(n), 1.92e6};
    for (auto& v : s.samples) v = std::polar(1.0, ph(rng));
    return s;
}

std::vector<cplx> noise_of(const TimeSignal& out, const TimeSignal& in) {
    std::vector<cplx> d(out.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = out.samples[i] - in.samples[i];
    return d;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("apply_cfo") {
    const auto x = unit_signal(1000, 1);

    CHECK(apply_cfo(x, 0.0, 0.0).samples == x.samples);

    const auto q = apply_cfo(x, x.sample_rate_hz / 4.0, 0.0);
    CHECK(std::abs(q.samples[1] / x.samples[1] - cplx(0.0, 1.0)) < 1e-12);

    const auto back = apply_cfo(apply_cfo(x, 1234.5, 0.3), -1234.5, -0.3);
    CHECK(test::max_abs_diff(back.samples, x.samples) < 1e-12);

    const auto r = apply_cfo(x, 777.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(std::abs(r.samples[i]) - 1.0) < 1e-14);

    // Continuous phase: sample n carries 2 pi f n / fs + phi.
    const double f = 500.0;
    const auto c = apply_cfo(x, f, 0.25);
    for (std::size_t n : {0u, 1u, 137u, 999u}) {
        const double expected = 2.0 * std::numbers::pi * f * static_cast<double>(n) / x.sample_rate_hz + 0.25;
        CHECK(std::abs(c.samples[n] / x.samples[n] - std::polar(1.0, expected)) < 1e-12);
    }
}

TEST_CASE("apply_awgn") {
    const auto x = unit_signal(1'000'000, 2);

    CHECK(apply_awgn(x, kNoNoise, 1).samples == x.samples);
    CHECK(apply_awgn(x, 3.0, 9).samples == apply_awgn(x, 3.0, 9).samples);

    const auto y = apply_awgn(x, 0.0, 5);
    const auto n = noise_of(y, x);
    double p = 0.0;
    cplx mean{};
    for (const auto& v : n) {
        p += std::norm(v);
        mean += v;
    }
    p /= static_cast<double>(n.size());
    mean /= static_cast<double>(n.size());
    CHECK(std::abs(p - 1.0) < 0.01);
    // Each component has variance 1/2; 3 sigma of the sample mean.
    const double bound = 3.0 * std::sqrt(0.5 / static_cast<double>(n.size()));
    CHECK(std::abs(mean.real()) < bound);
    CHECK(std::abs(mean.imag()) < bound);

    const TimeSignal zero{std::vector<cplx>(10), 1.0};
    try {
        (void)apply_awgn(zero, 10.0, 1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroPowerSignal);
    }
}

TEST_CASE("transmit") {
    const auto x = unit_signal(100'000, 3);

    CHECK(transmit(x, ChannelConfig{}).samples == x.samples);

    ChannelConfig g2;
    g2.gain = 2.0;
    CHECK(std::abs(transmit(x, g2).mean_power() - 4.0) < 1e-9);

    ChannelConfig full{321.0, 0.7, 1.5, 12.0, 44};
    CHECK(transmit(x, full).samples == transmit(x, full).samples);

    SUBCASE("empirical SNR within 0.1 dB") {
        for (double snr : {0.0, 10.0, 20.0}) {
            ChannelConfig cfg{250.0, 0.4, 0.8, snr, 77};
            const auto y = transmit(x, cfg);
            ChannelConfig clean = cfg;
            clean.snr_db = kNoNoise;
            const auto ref = transmit(x, clean);
            const auto n = noise_of(y, ref);
            double pn = 0.0;
            for (const auto& v : n) pn += std::norm(v);
            pn /= static_cast<double>(n.size());
            CHECK(std::abs(10.0 * std::log10(ref.mean_power() / pn) - snr) < 0.1);
        }
    }

    SUBCASE("noise from different seeds is uncorrelated") {
        const auto a = noise_of(apply_awgn(x, 0.0, 1), x);
        const auto b = noise_of(apply_awgn(x, 0.0, 2), x);
        cplx cross{};
        double pa = 0.0, pb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            cross += a[i] * std::conj(b[i]);
            pa += std::norm(a[i]);
            pb += std::norm(b[i]);
        }
        CHECK(std::abs(cross) / std::sqrt(pa * pb) < 0.01);
    }

    ChannelConfig bad;
    bad.gain = 0.0;
    CHECK_THROWS_AS((void)transmit(x, bad), Error);
}

}  // TEST_SUITE
