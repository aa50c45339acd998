// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "gexp/gexp.hpp"

using namespace gexp;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = budget_s <= 0.0 || secs < budget_s;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failures;
    char budget[64] = "";
    if (budget_s > 0.0) std::snprintf(budget, sizeof(budget), " budget %.0f s", budget_s);
    std::printf("%s %2d %s: %s [%.2f s%s]%s\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs, budget,
                in_budget ? "" : " over budget");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

Outcome all_rows_pass(const std::vector<ExperimentRecord>& rows) {
    const auto s = summarize(rows);
    std::string detail = std::to_string(s.pass) + " pass, " + std::to_string(s.fail) + " fail, " +
                         std::to_string(s.info) + " info, " + std::to_string(s.flagged) + " flagged";
    for (const auto& r : rows) {
        if (r.verdict == Verdict::fail) {
            detail += "; first failure: " + r.experiment + " " + r.params;
            break;
        }
    }
    return {s.fail == 0 && s.pass > 0, detail};
}

std::function<double(double)> random_polynomial(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(5);
    for (auto& v : c) v = u(rng);
    return [c](double x) { return c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4]))); };
}

}  // namespace

int main() {
    const VolatilityBand band(0.5, 1.0);
    std::printf("gexp acceptance suite, %zu worker thread(s)\n", worker_count());

    criterion(1, "axioms on the exact tree", 10.0, [] {
        AxiomConfig cfg;
        cfg.n = 6;
        cfg.count = 100;
        return all_rows_pass(run_axioms(cfg));
    });

    criterion(2, "grid DP matches the exact tree", 60.0, [&] {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> thr(0.2, 1.5);
        double worst = 0.0;
        std::size_t count = 0;
        GridOptions opts;
        opts.search = SigmaSearch::family;
        const auto compare = [&](const WalkSpec& spec, const SpatialGrid& grid, const PathFunctional& f) {
            const auto ex = exact_walk_value(spec, f);
            const auto gr = grid_walk_value(spec, grid, f, opts);
            worst = std::max({worst, std::abs(ex.pair.upper - gr.pair.upper), std::abs(ex.pair.lower - gr.pair.lower)});
            ++count;
        };
        const WalkSpec two{8, StepFamily(band, 2), Scale::sqrt_n};
        for (int i = 0; i < 50; ++i) compare(two, SpatialGrid::aligned(two, 2), PathFunctional::of_terminal(random_polynomial(rng)));
        const WalkSpec three{8, StepFamily(band, 3), Scale::sqrt_n};
        for (int i = 0; i < 25; ++i) {
            const double t = thr(rng);
            compare(three, SpatialGrid::aligned(three, 4),
                    PathFunctional::of_abs_max([t](double s) { return std::clamp((s - t) / 0.2, 0.0, 1.0); }));
        }
        for (int i = 0; i < 25; ++i) {
            const double t = thr(rng);
            compare(three, SpatialGrid::aligned(three, 4), PathFunctional::of_max([t](double s) { return s * s - t * s; }));
        }
        return Outcome{worst <= 5e-3, std::to_string(count) + " functionals, n=8, K in {2,3}, max abs error " +
                                          fmt("%.3g", worst)};
    });

    criterion(3, "G-normal moments and linear exactness", 30.0, [&] {
        const auto p = gnormal_pair({[](double x) { return x * x; }, 1.0, 1, false, "x2"}, band);
        const auto grid = PdeGrid::with_cfl(band);
        const auto lin = solve_gheat({[](double x) { return 2.0 * x - 0.5; }, 2.0, 0, false, "linear"}, band, grid);
        double lin_err = 0.0;
        for (std::size_t j = 0; j < grid.points; ++j) lin_err = std::max(lin_err, std::abs(lin.values[j] - (2.0 * lin.x(j) - 0.5)));
        const bool ok = std::abs(p.pair.upper - 1.0) <= 1e-3 && std::abs(p.pair.lower - 0.25) <= 1e-3 && lin_err <= 1e-10;
        return Outcome{ok, fmt("E[x^2] = (%.6f, %.6f), linear error %.2g", p.pair.upper, p.pair.lower, lin_err)};
    });

    criterion(4, "CLT: grid DP against the G-heat equation", 300.0, [] {
        CltConfig cfg;
        return all_rows_pass(run_clt(cfg));
    });

    criterion(5, "capacity limits of the running maximum", 180.0, [&] {
        const double ref_v = 2.0 * normal_tail(1.0);
        const double ref_l = 2.0 * normal_tail(2.0);
        const WalkSpec spec{1024, StepFamily(band, 16), Scale::sqrt_n};
        const auto b = walk_capacity(spec, {Statistic::max, 1.0, Direction::above}, 0.1);
        const bool refs = std::abs(ref_v - 0.317311) < 1e-6 && std::abs(ref_l - 0.045500) < 1e-6;
        const bool ok = refs && b.upper_contains(ref_v, 0.03) && b.lower_contains(ref_l, 0.03);
        return Outcome{ok, fmt("V in [%.5f, %.5f] vs %.6f", b.upper_cap.lo, b.upper_cap.hi, ref_v) +
                               fmt(", v in [%.5f, %.5f] vs %.6f", b.lower_cap.lo, b.lower_cap.hi, ref_l)};
    });

    criterion(6, "small-ball sandwich", 1.0, [] {
        const double c = std::numbers::pi * std::numbers::pi / 8.0;
        bool ok = true;
        double tightest = 1.0;
        for (int i = 2; i <= 10; ++i) {
            const double x = 0.1 * i;
            const double e = std::exp(-c / (x * x));
            const double v = std_small_ball(x).value;
            ok = ok && (2.0 / std::numbers::pi) * e <= v && v <= (4.0 / std::numbers::pi) * e;
            tightest = std::min(tightest, (4.0 / std::numbers::pi) * e - v);
        }
        return Outcome{ok, "x = 0.2..1.0, smallest upper gap " + fmt("%.3g", tightest)};
    });

    criterion(7, "small-deviation constant and finite-n link", 180.0, [&] {
        const double x = 0.1;
        const double constant = x * x * std::log(std_small_ball(x).value);
        const double target = -std::numbers::pi * std::numbers::pi / 8.0;
        const WalkSpec spec{512, StepFamily(band, 16), Scale::sqrt_n};
        const auto b = walk_capacity(spec, {Statistic::abs_max, 0.4, Direction::below}, 0.1);
        const double sb08 = std_small_ball(0.8).value;
        const double sb04 = std_small_ball(0.4).value;
        const bool ok = std::abs(constant - target) <= 0.01 && b.upper_contains(sb08, 0.03) && b.lower_contains(sb04, 0.03);
        return Outcome{ok, fmt("x^2 log P = %.5f vs %.5f", constant, target) +
                               fmt(", V in [%.4f, %.4f] vs %.4f", b.upper_cap.lo, b.upper_cap.hi, sb08) +
                               fmt(", v in [%.2e, %.2e] vs %.2e", b.lower_cap.lo, b.lower_cap.hi, sb04)};
    });

    criterion(8, "Rosenthal ratio", 120.0, [] {
        RosenthalConfig cfg;
        cfg.p_list = {2};
        return all_rows_pass(run_rosenthal(cfg));
    });

    criterion(9, "representation lower bound and optimal policies", 300.0, [] {
        RepresentationConfig cfg;
        return all_rows_pass(run_representation(cfg));
    });

    criterion(10, "Anderson shift inequality", 120.0, [] {
        AndersonConfig cfg;
        return all_rows_pass(run_anderson(cfg));
    });

    criterion(11, "Chung LIL smoke test", 300.0, [] {
        LilConfig cfg;
        cfg.sigma = 1.0;
        const auto rows = run_lil(cfg);
        const auto& summary = rows.back();
        return Outcome{summary.verdict == Verdict::pass,
                       fmt("%.0f of 8 seeds inside [0.6, 1.4]", summary.computed.front())};
    });

    criterion(12, "determinism of every subcommand", 0.0, [] {
        const std::vector<std::vector<std::string>> cases{
            {"gheat", "--phi", "ramp", "--points", "201"},
            {"walk", "--phi", "sin", "--n", "64"},
            {"capacity", "--event", "max", "--x", "1", "--n", "128"},
            {"clt", "--n-list", "32,64", "--phi", "sin,x2", "--two-time-n", "32", "--paths", "1000", "--seed", "4"},
            {"donsker", "--n-list", "64", "--x-list", "1"},
            {"smalldev", "--n", "64", "--joint-n", "64", "--trend", "64", "--paths", "1000", "--steps", "100"},
            {"lil", "--n", "100000", "--seed", "13"},
            {"rosenthal", "--n-list", "16,32", "--paths", "2000", "--seed", "5"},
            {"axioms", "--n", "6", "--seed", "1"},
        };
        std::string bad;
        for (const auto& args : cases) {
            for (const char* format : {"csv", "json"}) {
                auto a = args;
                a.insert(a.end(), {"--format", format});
                std::ostringstream o1, o2, e1, e2;
                const int s1 = cli::run_cli(a, o1, e1);
                const int s2 = cli::run_cli(a, o2, e2);
                if (s1 == 2 || s1 != s2 || o1.str() != o2.str() || o1.str().empty()) bad += " " + args.front();
            }
        }
        return Outcome{bad.empty(), bad.empty() ? std::to_string(cases.size()) + " subcommands, csv and json identical"
                                                : "differs:" + bad};
    });

    std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
