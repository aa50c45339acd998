#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

#include "gexp/analytic.hpp"

using namespace gexp;
using Catch::Approx;

namespace {

// High-precision reference values (mpmath, 30 digits).
constexpr double tail_1 = 0.158655253931457051414767454368;
constexpr double two_tail_1 = 0.317310507862914102829534908737;
constexpr double two_tail_2 = 0.0455002638963584142813139237;
constexpr double sb_05 = 0.00915699028976075575;
constexpr double sb_10 = 0.370777429799523905;
constexpr double sb_20 = 0.908999476153633753;
constexpr double sup_abs_second_moment = 1.83193118835442401;

/**
 * P(sup_{[0,1]} |B| <= x) by simulation; each step multiplies in the
 * Brownian-bridge probability of staying below each barrier, so the
 * estimate has no discrete-monitoring bias to first order.
 */
McEstimate bridge_small_ball(double x, std::size_t paths, std::size_t steps, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    const double dt = 1.0 / static_cast<double>(steps);
    const double sd = std::sqrt(dt);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
        double b = 0.0;
        double weight = 1.0;
        for (std::size_t k = 0; k < steps && weight > 0.0; ++k) {
            const double next = b + sd * normal(gen);
            if (std::abs(next) > x) {
                weight = 0.0;
                break;
            }
            const double up = std::exp(-2.0 * (x - b) * (x - next) / dt);
            const double down = std::exp(-2.0 * (x + b) * (x + next) / dt);
            weight *= std::max(0.0, 1.0 - up - down);
            b = next;
        }
        sum += weight;
        sum_sq += weight * weight;
    }
    const auto n = static_cast<double>(paths);
    const double mean = sum / n;
    return {mean, std::sqrt((sum_sq / n - mean * mean) / (n - 1.0)), paths, steps, seed};
}

PathFunctional terminal(std::function<double(double)> f) { return PathFunctional::of_terminal(std::move(f)); }

}  // namespace

TEST_CASE("normal_tail", "[analytic]") {
    REQUIRE(normal_tail(0.0) == 0.5);
    REQUIRE(std::abs(normal_tail(1.0) - tail_1) <= 1e-12 * tail_1);
    REQUIRE(normal_tail(-1.0) == Approx(1.0 - tail_1).epsilon(1e-12));
    for (double x : {0.1, 0.5, 1.0, 2.5, 4.0}) REQUIRE(std::abs(normal_tail(-x) - (1.0 - normal_tail(x))) <= 1e-15);
    REQUIRE(std::abs(2.0 * normal_tail(2.0) - two_tail_2) <= 1e-12 * two_tail_2);
}

TEST_CASE("std_small_ball", "[analytic]") {
    REQUIRE_THROWS(std_small_ball(0.0));
    REQUIRE_THROWS(std_small_ball(-1.0));
    REQUIRE(std_small_ball(10.0).value == Approx(1.0).margin(1e-12));
    REQUIRE(std_small_ball(0.5).value == Approx(sb_05).epsilon(1e-12));
    REQUIRE(std_small_ball(1.0).value == Approx(sb_10).epsilon(1e-12));
    REQUIRE(std_small_ball(2.0).value == Approx(sb_20).epsilon(1e-12));

    SECTION("sandwich") {
        for (int i = 2; i <= 20; ++i) {
            const double x = 0.1 * i;
            const double e = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * x * x));
            const double v = std_small_ball(x).value;
            REQUIRE(2.0 / std::numbers::pi * e <= v);
            REQUIRE(v <= 4.0 / std::numbers::pi * e);
        }
    }
    SECTION("monotone with an honored remainder") {
        double prev = 0.0;
        for (int i = 1; i <= 60; ++i) {
            const auto r = std_small_ball(0.05 * i);
            REQUIRE(r.value >= 0.0);
            REQUIRE(r.value <= 1.0);
            REQUIRE(r.truncation_bound <= 1e-15);
            if (prev < 1.0) REQUIRE(r.value > prev);
            prev = r.value;
        }
    }
    SECTION("agrees with simulation at x=0.5") {
        const auto mc = bridge_small_ball(0.5, 200000, 500, 11);
        REQUIRE(std::abs(mc.mean - std_small_ball(0.5).value) <= 3.0 * mc.std_error);
    }
    SECTION("second moment of the running maximum") {
        REQUIRE(brownian_sup_abs_second_moment() == Approx(sup_abs_second_moment).epsilon(1e-8));
    }
}

TEST_CASE("gcap_sup_abs", "[analytic]") {
    const VolatilityBand band(0.5, 1.0);
    SECTION("degenerate band") {
        const auto c = gcap_sup_abs(0.5, VolatilityBand(1.0, 1.0), SupDirection::le);
        REQUIRE(c.pair.upper_cap == std_small_ball(0.5).value);
        REQUIRE(c.pair.lower_cap == std_small_ball(0.5).value);
    }
    SECTION("closed forms") {
        const auto le = gcap_sup_abs(0.5, band, SupDirection::le);
        REQUIRE(le.pair.upper_cap == std_small_ball(1.0).value);
        REQUIRE(le.pair.lower_cap == std_small_ball(0.5).value);
        const auto ge = gcap_sup_abs(1.0, band, SupDirection::ge);
        REQUIRE(ge.pair.upper_cap == 1.0 - std_small_ball(1.0).value);
        REQUIRE(ge.pair.lower_cap == 1.0 - std_small_ball(2.0).value);
        REQUIRE(le.pair.valid());
        REQUIRE(ge.pair.valid());
    }
    SECTION("complement duality") {
        for (double x : {0.2, 0.45, 0.8, 1.3, 3.0}) {
            const auto le = gcap_sup_abs(x, band, SupDirection::le);
            const auto ge = gcap_sup_abs(x, band, SupDirection::ge);
            REQUIRE(le.pair.upper_cap + ge.pair.lower_cap == 1.0);
            REQUIRE(le.pair.lower_cap + ge.pair.upper_cap == 1.0);
        }
    }
    SECTION("sandwich with sigma_lo and sigma_hi") {
        for (int i = 2; i <= 10; ++i) {
            const double x = 0.1 * i;
            const auto c = gcap_sup_abs(x, band, SupDirection::le);
            const auto bound = [x](double s) { return std::exp(-std::numbers::pi * std::numbers::pi * s * s / (8.0 * x * x)); };
            REQUIRE(2.0 / std::numbers::pi * bound(0.5) <= c.pair.upper_cap);
            REQUIRE(c.pair.upper_cap <= 4.0 / std::numbers::pi * bound(0.5));
            REQUIRE(2.0 / std::numbers::pi * bound(1.0) <= c.pair.lower_cap);
            REQUIRE(c.pair.lower_cap <= 4.0 / std::numbers::pi * bound(1.0));
        }
    }
    SECTION("zero volatility") {
        const auto c = gcap_sup_abs(0.5, VolatilityBand(0.0, 1.0), SupDirection::le);
        REQUIRE(c.degenerate);
        REQUIRE(c.pair.upper_cap == 1.0);
        REQUIRE_FALSE(gcap_sup_abs(0.5, band, SupDirection::le).degenerate);
    }
    REQUIRE_THROWS(gcap_sup_abs(-1.0, band, SupDirection::le));
}

TEST_CASE("gcap_onesided_sup", "[analytic]") {
    const auto deg = gcap_onesided_sup(1.0, VolatilityBand(1.0, 1.0));
    REQUIRE(std::abs(deg.pair.upper_cap - two_tail_1) <= 1e-12 * two_tail_1);
    REQUIRE(deg.pair.lower_cap == deg.pair.upper_cap);

    const auto near_zero = gcap_onesided_sup(1e-8, VolatilityBand(0.5, 1.0));
    REQUIRE(near_zero.pair.upper_cap == Approx(1.0).margin(1e-7));
    REQUIRE(near_zero.pair.lower_cap == Approx(1.0).margin(1e-7));

    const auto c = gcap_onesided_sup(1.0, VolatilityBand(0.5, 1.0));
    REQUIRE(std::abs(c.pair.upper_cap - two_tail_1) <= 1e-12 * two_tail_1);
    REQUIRE(std::abs(c.pair.lower_cap - two_tail_2) <= 1e-12 * two_tail_2);

    double prev = 1.0;
    for (int i = 1; i <= 30; ++i) {
        const double v = gcap_onesided_sup(0.1 * i, VolatilityBand(0.7, 0.7)).pair.upper_cap;
        REQUIRE(v < prev);
        prev = v;
    }
    const auto z = gcap_onesided_sup(0.5, VolatilityBand(0.0, 1.0));
    REQUIRE(z.degenerate);
    REQUIRE(z.pair.lower_cap == 0.0);
    REQUIRE_THROWS(gcap_onesided_sup(0.0, VolatilityBand(0.5, 1.0)));
}

TEST_CASE("mc_policy_value", "[analytic][mc]") {
    const VolatilityBand band(0.5, 1.0);
    PolicyFamily fam;
    fam.training_paths = 1000;
    fam.restarts = 1;
    fam.sweeps = 2;

    SECTION("convex recovers sigma_hi") {
        const auto r = mc_policy_value(terminal([](double x) { return x * x; }), band, fam, 20000, 32, 5);
        REQUIRE(std::abs(r.estimate.mean - 1.0) <= 3.0 * r.estimate.std_error + r.bias_proxy);
        REQUIRE(r.fraction_at(1.0) >= 0.95);
        REQUIRE(r.estimate.paths == 20000);
        REQUIRE(r.estimate.steps == 32);
    }
    SECTION("concave recovers sigma_lo") {
        const auto r = mc_policy_value(terminal([](double x) { return -x * x; }), band, fam, 20000, 32, 6);
        REQUIRE(std::abs(r.estimate.mean + 0.25) <= 3.0 * r.estimate.std_error + r.bias_proxy);
        REQUIRE(r.fraction_at(0.5) >= 0.95);
    }
    SECTION("small-ball ramp stays below the closed-form capacity") {
        const auto ramps = mollified_indicator(0.5, Direction::below, 0.1);
        const auto f = PathFunctional::of_abs_max(ramps.inner.evaluator);
        const auto r = mc_policy_value(f, band, fam, 20000, 64, 7);
        const double cap = gcap_sup_abs(0.5, band, SupDirection::le).pair.upper_cap;
        REQUIRE(r.estimate.mean <= cap + 3.0 * r.estimate.std_error + r.bias_proxy);
    }
    SECTION("deterministic under a fixed seed and thread count") {
        const auto f = terminal([](double x) { return std::sin(x); });
        const auto a = mc_policy_value(f, band, fam, 500, 16, 9);
        ::setenv("GEXP_THREADS", "3", 1);
        const auto b = mc_policy_value(f, band, fam, 500, 16, 9);
        ::unsetenv("GEXP_THREADS");
        REQUIRE(a.estimate.mean == b.estimate.mean);
        REQUIRE(a.policy.bits() == b.policy.bits());
    }
    SECTION("errors") {
        REQUIRE_THROWS(mc_policy_value(terminal([](double x) { return x; }), band, fam, 99, 8, 1));
        REQUIRE_THROWS(FeedbackPolicy::constant(band, PolicyGrid{}, 1.5));
        REQUIRE_THROWS(mc_evaluate_control(terminal([](double x) { return x; }), band,
                                           [](double, double, double) { return 2.0; }, 200, 8, 1));
        const auto ok = mc_evaluate_control(terminal([](double x) { return x * x; }), band,
                                            [](double, double, double) { return 1.0; }, 4000, 8, 1);
        REQUIRE(std::abs(ok.mean - 1.0) <= 4.0 * ok.std_error);
    }
}

TEST_CASE("anderson_shift_check", "[analytic][mc]") {
    SECTION("zero shift is the centered estimate") {
        const auto r = anderson_shift_check(0.0, 0.5, 2000, 100, 3);
        REQUIRE(r.shifted.mean == r.centered.mean);
        REQUIRE(r.shifted.std_error == r.centered.std_error);
    }
    SECTION("shifted ball is less likely") {
        const auto r = anderson_shift_check(0.3, 0.5, 20000, 200, 4);
        REQUIRE(r.shifted.mean <= r.centered.mean + 3.0 * r.difference_std_error);
    }
    SECTION("far shift is dominated by the terminal event") {
        const auto r = anderson_shift_check(1.0, 0.5, 20000, 200, 5);
        REQUIRE(r.shifted.mean <= r.terminal.mean);
    }
    REQUIRE_THROWS(anderson_shift_check(0.1, 0.5, 50, 10, 1));
    REQUIRE_THROWS(anderson_shift_check(0.1, -0.5, 500, 10, 1));
}
