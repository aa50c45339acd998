#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gexp/core.hpp"

using namespace gexp;
using Catch::Approx;

TEST_CASE("VolatilityBand validates its endpoints", "[core]") {
    REQUIRE_NOTHROW(VolatilityBand(0.0, 0.0));
    REQUIRE_NOTHROW(VolatilityBand(1.0, 1.0));
    REQUIRE(VolatilityBand(1.0, 1.0).degenerate());
    REQUIRE_THROWS_AS(VolatilityBand(-0.1, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(VolatilityBand(0.1, INFINITY), std::invalid_argument);
    try {
        VolatilityBand(1.0, 0.5);
        FAIL("expected throw");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("sigma_lo > sigma_hi") != std::string::npos);
        REQUIRE(msg.find("sigma_lo=1") != std::string::npos);
        REQUIRE(msg.find("sigma_hi=0.5") != std::string::npos);
    }
}

TEST_CASE("g_eval", "[core]") {
    const VolatilityBand band(0.5, 1.0);
    REQUIRE(g_eval(band, 2.0) == 1.0);
    REQUIRE(g_eval(band, -2.0) == -0.25);
    REQUIRE(g_eval(band, 0.0) == 0.0);
    REQUIRE(g_eval(VolatilityBand(0.3, 2.0), 0.0) == 0.0);

    SECTION("positively homogeneous") {
        for (double a : {-3.0, -0.5, 0.7, 4.0}) {
            for (double lam : {0.0, 0.25, 3.0}) {
                REQUIRE(g_eval(band, lam * a) == Approx(lam * g_eval(band, a)).margin(1e-15));
            }
        }
    }
}

TEST_CASE("conjugate flips the sign", "[core]") {
    REQUIRE(conjugate(0.3) == -0.3);
    REQUIRE(conjugate(-1.5) == 1.5);
}

TEST_CASE("mollified_indicator ramp endpoints", "[core]") {
    SECTION("above") {
        const auto r = mollified_indicator(1.0, Direction::above, 0.5);
        REQUIRE(r.outer(0.5) == 0.0);
        REQUIRE(r.outer(1.0) == 1.0);
        REQUIRE(r.inner(1.0) == 0.0);
        REQUIRE(r.inner(1.5) == 1.0);
        REQUIRE(r.width == 0.5);
        REQUIRE(r.outer.lipschitz_const == 2.0);
    }
    SECTION("below") {
        const auto r = mollified_indicator(1.0, Direction::below, 0.5);
        REQUIRE(r.outer(1.0) == 1.0);
        REQUIRE(r.outer(1.5) == 0.0);
        REQUIRE(r.inner(0.5) == 1.0);
        REQUIRE(r.inner(1.0) == 0.0);
    }
    SECTION("zero threshold needs absolute width") {
        REQUIRE_THROWS_WITH(mollified_indicator(0.0, Direction::above, 0.1),
                            Catch::Matchers::ContainsSubstring("absolute"));
        const auto r = mollified_indicator(0.0, Direction::above, 0.1, RampWidth::absolute);
        REQUIRE(r.outer(0.0) == 1.0);
        REQUIRE(r.outer(-0.1) == 0.0);
    }
    SECTION("nonpositive delta") {
        REQUIRE_THROWS(mollified_indicator(1.0, Direction::above, 0.0));
        REQUIRE_THROWS(mollified_indicator(1.0, Direction::above, -1.0));
    }
}

TEST_CASE("mollified_indicator pointwise ordering", "[core]") {
    for (auto dir : {Direction::above, Direction::below}) {
        for (double thr : {1.0, 0.4, -0.7}) {
            const double delta = 0.25;
            const auto r = mollified_indicator(thr, dir, delta);
            const double w = delta * std::abs(thr);
            for (int i = 0; i <= 1000; ++i) {
                const double y = thr - 2.0 + 4.0 * i / 1000.0;
                const bool in_event = dir == Direction::above ? y >= thr : y <= thr;
                const bool in_shrunk = dir == Direction::above ? y >= thr + w : y <= thr - w;
                const bool in_grown = dir == Direction::above ? y >= thr - w : y <= thr + w;
                const double ind = in_event ? 1.0 : 0.0;
                REQUIRE((in_shrunk ? 1.0 : 0.0) <= r.inner(y));
                REQUIRE(r.inner(y) <= ind);
                REQUIRE(ind <= r.outer(y));
                REQUIRE(r.outer(y) <= (in_grown ? 1.0 : 0.0));
            }
        }
    }
}

TEST_CASE("ScalarTestFunction growth spot check", "[core]") {
    const ScalarTestFunction sq{[](double x) { return x * x; }, 1.0, 1, false, "x^2"};
    REQUIRE(sq.spot_check_growth());
    const ScalarTestFunction cube{[](double x) { return x * x * x; }, 1.0, 1, false, "x^3"};
    REQUIRE_FALSE(cube.spot_check_growth());
    const ScalarTestFunction s{[](double x) { return std::sin(x); }, 1.0, 0, true, "sin"};
    REQUIRE(s.spot_check_growth());
    REQUIRE(s.negated()(1.0) == -std::sin(1.0));
}

TEST_CASE("PathFunctional summaries", "[core]") {
    const std::vector<double> path{0.0, 1.0, -2.5, 0.5, 1.5};
    SECTION("terminal") {
        auto f = PathFunctional::of_terminal([](double x) { return x * x; });
        REQUIRE(f.evaluate(path) == 2.25);
        REQUIRE(f.summary_dimension() == 1);
    }
    SECTION("running abs max") {
        auto f = PathFunctional::of_abs_max([](double s) { return s; });
        REQUIRE(f.evaluate(path) == 2.5);
        REQUIRE(f.summary_dimension() == 2);
    }
    SECTION("running max includes the origin") {
        auto f = PathFunctional::of_max([](double s) { return s; });
        REQUIRE(f.evaluate(path) == 1.5);
        const std::vector<double> down{0.0, -1.0, -2.0};
        REQUIRE(f.evaluate(down) == 0.0);
    }
    SECTION("snapshot") {
        PathFunctional f;
        f.kind = SummaryKind::snapshot;
        f.snapshot_step = 2;
        f.terminal = [](double s, double x) { return s * 10.0 + x; };
        REQUIRE(f.evaluate(path) == Approx(-25.0 + 1.5));
    }
    SECTION("deterministic and mapped") {
        auto f = PathFunctional::of_abs_max([](double s) { return s; }).mapped([](double v) { return v * v; });
        REQUIRE(f.evaluate(path) == f.evaluate(path));
        REQUIRE(f.evaluate(path) == 6.25);
    }
}

TEST_CASE("axiom_report", "[core]") {
    REQUIRE_THROWS(axiom_report({}, 1e-9));

    AxiomSample ok;
    ok.e_phi = 1.0;
    ok.e_psi = 0.5;
    ok.e_sum = 1.4;
    ok.phi_dominates_psi = true;
    ok.lambda = 2.0;
    ok.e_scaled = 2.0;
    ok.c = 3.0;
    ok.e_shifted = 4.0;
    ok.e_constant = 3.0;
    std::vector<AxiomSample> samples{ok};
    REQUIRE(axiom_report(samples, 1e-9).all_pass());

    SECTION("each violation is detected") {
        auto bad = ok;
        bad.e_psi = 1.1;
        REQUIRE_FALSE(axiom_report(std::vector{bad}, 1e-9).monotonicity.pass);
        bad = ok;
        bad.e_sum = 1.6;
        auto rep = axiom_report(std::vector{bad}, 1e-9);
        REQUIRE_FALSE(rep.subadditivity.pass);
        REQUIRE(rep.subadditivity.worst_violation == Approx(0.1));
        bad = ok;
        bad.e_scaled = 2.1;
        REQUIRE_FALSE(axiom_report(std::vector{bad}, 1e-9).homogeneity.pass);
        bad = ok;
        bad.e_shifted = 3.9;
        REQUIRE_FALSE(axiom_report(std::vector{bad}, 1e-9).translation.pass);
        bad = ok;
        bad.e_constant = 3.5;
        REQUIRE_FALSE(axiom_report(std::vector{bad}, 1e-9).constant_preserving.pass);
    }
    SECTION("zero lambda") {
        auto z = ok;
        z.lambda = 0.0;
        z.e_scaled = 0.0;
        REQUIRE(axiom_report(std::vector{z}, 1e-9).homogeneity.pass);
        z.lambda = -1.0;
        REQUIRE_THROWS(axiom_report(std::vector{z}, 1e-9));
    }
}

TEST_CASE("CapacityPair and Interval", "[core]") {
    REQUIRE(CapacityPair{0.6, 0.2}.valid());
    REQUIRE_FALSE(CapacityPair{0.2, 0.6}.valid());
    REQUIRE_FALSE(CapacityPair{1.2, 0.6}.valid());
    const Interval iv{0.2, 0.4};
    REQUIRE(iv.contains(0.3));
    REQUIRE_FALSE(iv.contains(0.45));
    REQUIRE(iv.contains(0.45, 0.06));
}
