/**
 * @file analytic.hpp
 * @brief Closed-form G-Brownian capacities, Brownian small-ball series,
 *        normal tails and Monte-Carlo evaluation of volatility controls.
 *
 * Capacities of sup-type events under G-Brownian motion reduce to classical
 * Brownian probabilities at sigma_lo or sigma_hi. Upper expectations are
 * suprema over adapted volatility controls theta in [sigma_lo, sigma_hi] of
 * E_P[phi(int theta dB)]; a simulated control therefore certifies a lower
 * bound up to discretization bias.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gexp/core.hpp"
#include "gexp/parallel.hpp"
#include "gexp/random.hpp"

namespace gexp {

/// 1 - Phi(x) through the complementary error function.
inline double normal_tail(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

struct SeriesResult {
    double value = 0.0;
    std::size_t terms_used = 0;
    double truncation_bound = 0.0;
};

/**
 * P(sup_{0<=t<=1} |B(t)| <= x)
 *   = (4/pi) sum_k (-1)^k / (2k+1) exp(-(2k+1)^2 pi^2 / (8 x^2)).
 * Terms decrease monotonically, so the first omitted term bounds the error.
 * Summation stops once a term drops below 1e-17 relative to the partial sum,
 * which keeps the tiny values at small x usable under a logarithm.
 */
inline SeriesResult std_small_ball(double x) {
    if (!(x > 0.0)) throw std::invalid_argument("std_small_ball: x must be positive");
    constexpr double pi = std::numbers::pi;
    const double c = pi * pi / (8.0 * x * x);
    SeriesResult r;
    double sum = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double odd = 2.0 * static_cast<double>(k) + 1.0;
        const double a = std::exp(-odd * odd * c) / odd;
        if (k > 0 && (a < 1e-17 * sum || a == 0.0)) {
            r.terms_used = k;
            r.truncation_bound = 4.0 / pi * a;
            break;
        }
        sum += (k % 2 == 0) ? a : -a;
    }
    r.value = std::clamp(4.0 / pi * sum, 0.0, 1.0);
    return r;
}

enum class SupDirection { le, ge };

struct AnalyticCapacity {
    CapacityPair pair;
    bool degenerate = false;  ///< a zero volatility made one side trivial
};

namespace detail {
/// P(sup |sigma B| <= x) with the sigma = 0 limit.
inline double scaled_small_ball(double x, double sigma, bool& degenerate) {
    if (sigma == 0.0) {
        degenerate = true;
        return 1.0;
    }
    return std_small_ball(x / sigma).value;
}
}  // namespace detail

/// Capacities of {sup |W| <= x} (le) or {sup |W| >= x} (ge) for G-Brownian motion on [0, 1].
inline AnalyticCapacity gcap_sup_abs(double x, const VolatilityBand& band, SupDirection dir) {
    if (!(x > 0.0)) throw std::invalid_argument("gcap_sup_abs: x must be positive");
    AnalyticCapacity out;
    const double at_lo = detail::scaled_small_ball(x, band.lo(), out.degenerate);
    const double at_hi = detail::scaled_small_ball(x, band.hi(), out.degenerate);
    if (dir == SupDirection::le) {
        out.pair = {at_lo, at_hi};
    } else {
        out.pair = {1.0 - at_hi, 1.0 - at_lo};
    }
    return out;
}

/// Capacities of {sup W >= x}: 2 P(sigma B(1) >= x) at sigma_hi (V) and sigma_lo (v).
inline AnalyticCapacity gcap_onesided_sup(double x, const VolatilityBand& band) {
    if (!(x > 0.0)) throw std::invalid_argument("gcap_onesided_sup: x must be positive");
    AnalyticCapacity out;
    const auto reflect = [&](double sigma) {
        if (sigma == 0.0) {
            out.degenerate = true;
            return 0.0;
        }
        return std::min(1.0, 2.0 * normal_tail(x / sigma));
    };
    out.pair = {reflect(band.hi()), reflect(band.lo())};
    return out;
}

/// E[(sup_{0<=t<=1} |B(t)|)^2] = int_0^inf 2x (1 - P(sup|B| <= x)) dx.
inline double brownian_sup_abs_second_moment() {
    const auto integrand = [](double x) { return x <= 0.0 ? 0.0 : 2.0 * x * (1.0 - std_small_ball(x).value); };
    double total = 0.0;
    for (double a = 0.0; a < 12.0; a += 1.0) {
        total += [&] {
            const std::size_t panels = 400;
            const double h = 1.0 / static_cast<double>(panels);
            double s = integrand(a) + integrand(a + 1.0);
            for (std::size_t i = 1; i < panels; ++i) {
                s += (i % 2 == 1 ? 4.0 : 2.0) * integrand(a + h * static_cast<double>(i));
            }
            return s * h / 3.0;
        }();
    }
    return total;
}

// ---------------------------------------------------------------------------
// Monte Carlo under volatility controls
// ---------------------------------------------------------------------------

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
};

namespace detail {
struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    double std_error() const {
        if (count < 2) return 0.0;
        const auto n = static_cast<double>(count);
        const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
        return std::sqrt(var / n);
    }
};

inline McEstimate to_estimate(const Accumulator& acc, std::size_t steps, std::uint64_t seed) {
    return {acc.mean(), acc.std_error(), acc.count, steps, seed};
}

/// Standard normal increments for one path, derived from (seed, job, path).
inline void fill_normals(std::vector<double>& out, std::uint64_t seed, std::uint64_t job, std::uint64_t path) {
    SplitMix64 gen(stream_seed(seed, job, path));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& z : out) z = normal(gen);
}
}  // namespace detail

/// Coarse feedback grid over (time, position, running max of |position|).
struct PolicyGrid {
    std::size_t time_bins = 4;
    std::size_t position_bins = 8;
    std::size_t max_bins = 1;
    double position_range = 2.0;

    std::size_t cells() const { return time_bins * position_bins * max_bins; }

    std::size_t cell(double t, double x, double running_abs_max) const {
        const auto bin = [](double u, std::size_t bins) {
            const auto b = static_cast<std::ptrdiff_t>(std::floor(u * static_cast<double>(bins)));
            return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1));
        };
        const std::size_t tb = bin(t, time_bins);
        const std::size_t xb = bin((x + position_range) / (2.0 * position_range), position_bins);
        const std::size_t mb = bin(running_abs_max / position_range, max_bins);
        return (tb * position_bins + xb) * max_bins + mb;
    }
};

/// Bang-bang feedback control (sigma_lo or sigma_hi per cell), or a constant volatility.
class FeedbackPolicy {
public:
    FeedbackPolicy(VolatilityBand band, PolicyGrid grid, std::vector<std::uint8_t> high)
        : band_(band), grid_(grid), high_(std::move(high)) {
        if (high_.size() != grid_.cells()) throw std::invalid_argument("FeedbackPolicy: cell count mismatch");
    }

    static FeedbackPolicy constant(VolatilityBand band, PolicyGrid grid, double sigma) {
        if (!band.contains(sigma)) {
            throw std::invalid_argument("FeedbackPolicy: constant volatility " + std::to_string(sigma) +
                                        " outside band");
        }
        FeedbackPolicy p(band, grid, std::vector<std::uint8_t>(grid.cells(), sigma >= band.hi() ? 1 : 0));
        p.constant_ = sigma;
        return p;
    }

    double operator()(double t, double x, double running_abs_max) const {
        if (constant_) return *constant_;
        return high_[grid_.cell(t, x, running_abs_max)] ? band_.hi() : band_.lo();
    }

    double cell_sigma(std::size_t cell) const {
        if (constant_) return *constant_;
        return high_[cell] ? band_.hi() : band_.lo();
    }

    const PolicyGrid& grid() const noexcept { return grid_; }
    const std::vector<std::uint8_t>& bits() const noexcept { return high_; }
    std::optional<double> constant_sigma() const noexcept { return constant_; }

    void flip(std::size_t cell) {
        constant_.reset();
        high_[cell] ^= 1;
    }

private:
    VolatilityBand band_;
    PolicyGrid grid_;
    std::vector<std::uint8_t> high_;
    std::optional<double> constant_;
};

/// Search space and budget of the policy ascent.
struct PolicyFamily {
    PolicyGrid grid{};
    std::size_t constant_levels = 5;
    std::size_t restarts = 2;
    std::size_t sweeps = 3;
    std::size_t training_paths = 2000;
};

struct McPolicyResult {
    McEstimate estimate;   ///< fresh paths, `steps` Euler steps
    McEstimate in_sample;  ///< objective on the training paths
    FeedbackPolicy policy;
    double bias_proxy = 0.0;  ///< |mean at 2 steps - mean at steps| on the fresh paths
    std::vector<std::size_t> cell_visits;
    std::size_t evaluations = 0;

    /// Share of informative cells (visit share >= min_share) whose volatility equals sigma.
    double fraction_at(double sigma, double min_share = 0.01) const {
        std::size_t total = 0;
        for (std::size_t v : cell_visits) total += v;
        std::size_t informative = 0;
        std::size_t matching = 0;
        for (std::size_t c = 0; c < cell_visits.size(); ++c) {
            if (static_cast<double>(cell_visits[c]) < min_share * static_cast<double>(total)) continue;
            ++informative;
            if (std::abs(policy.cell_sigma(c) - sigma) <= 1e-12) ++matching;
        }
        return informative ? static_cast<double>(matching) / static_cast<double>(informative) : 0.0;
    }
};

using ControlFunction = std::function<double(double t, double position, double running_abs_max)>;

namespace detail {

/// Euler path of int theta dB from standard normal increments z; returns f along the path.
template <class Control, class Visit>
double euler_path_value(const PathFunctional& f, const Control& theta, std::span<const double> z, Visit&& visit) {
    const std::size_t steps = z.size();
    const double dt = 1.0 / static_cast<double>(steps);
    const double root_dt = std::sqrt(dt);
    double w = 0.0;
    double m = 0.0;
    double s = f.init_summary();
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double sigma = theta(t, w, m);
        visit(t, w, m);
        w += sigma * root_dt * z[k];
        m = std::max(m, std::abs(w));
        s = f.update(s, k + 1, w);
    }
    return f.terminal(s, w);
}

inline std::vector<double> training_normals(std::size_t paths, std::size_t steps, std::uint64_t seed) {
    std::vector<double> all(paths * steps);
    std::vector<double> buf(steps);
    for (std::size_t p = 0; p < paths; ++p) {
        fill_normals(buf, seed, 1, p);
        std::copy(buf.begin(), buf.end(), all.begin() + static_cast<std::ptrdiff_t>(p * steps));
    }
    return all;
}

inline double sample_mean(const PathFunctional& f, const FeedbackPolicy& policy, const std::vector<double>& normals,
                          std::size_t paths, std::size_t steps) {
    std::vector<double> values(paths);
    parallel_for(
        0, paths,
        [&](std::size_t p) {
            std::span<const double> z(normals.data() + p * steps, steps);
            values[p] = euler_path_value(f, policy, z, [](double, double, double) {});
        },
        64);
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(paths);
}

}  // namespace detail

/**
 * E_P[f(W_theta)] for one control on fresh paths; throws if the control
 * leaves the band.
 */
inline McEstimate mc_evaluate_control(const PathFunctional& f, const VolatilityBand& band,
                                      const ControlFunction& control, std::size_t paths, std::size_t steps,
                                      std::uint64_t seed) {
    if (paths < 100) throw std::invalid_argument("mc_evaluate_control: at least 100 paths required");
    if (steps < 1) throw std::invalid_argument("mc_evaluate_control: at least one step required");
    const auto checked = [&](double t, double x, double m) {
        const double s = control(t, x, m);
        if (!band.contains(s)) {
            throw std::invalid_argument("mc_evaluate_control: control volatility " + std::to_string(s) +
                                        " outside band");
        }
        return s;
    };
    detail::Accumulator acc;
    std::vector<double> z(steps);
    for (std::size_t p = 0; p < paths; ++p) {
        detail::fill_normals(z, seed, 3, p);
        acc.add(detail::euler_path_value(f, checked, z, [](double, double, double) {}));
    }
    return detail::to_estimate(acc, steps, seed);
}

/**
 * Best simulated value of f over a family of volatility controls.
 *
 * The search runs on `family.training_paths` common-random-number paths:
 * constant controls first, then coordinate ascent over the bang-bang
 * feedback cells from the best constant and from random restarts. The
 * winner is re-evaluated on `paths` fresh paths, so the reported mean is an
 * unbiased estimate of a single admissible control (a lower bound on the
 * upper expectation up to Euler bias). The bias proxy compares `steps`
 * against `2 * steps` on the same Brownian paths.
 */
inline McPolicyResult mc_policy_value(const PathFunctional& f, const VolatilityBand& band,
                                      const PolicyFamily& family, std::size_t paths, std::size_t steps,
                                      std::uint64_t seed) {
    if (paths < 100) throw std::invalid_argument("mc_policy_value: at least 100 paths required");
    if (steps < 1) throw std::invalid_argument("mc_policy_value: at least one step required");
    const PolicyGrid& grid = family.grid;
    const std::size_t train = std::max<std::size_t>(family.training_paths, 100);
    const std::vector<double> normals = detail::training_normals(train, steps, seed);
    std::size_t evaluations = 0;
    const auto objective = [&](const FeedbackPolicy& p) {
        ++evaluations;
        return detail::sample_mean(f, p, normals, train, steps);
    };

    const std::size_t levels = std::max<std::size_t>(family.constant_levels, 2);
    FeedbackPolicy best = FeedbackPolicy::constant(band, grid, band.lo());
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < levels; ++i) {
        const double sigma = i + 1 == levels ? band.hi()
                                             : band.lo() + band.width() * static_cast<double>(i) /
                                                               static_cast<double>(levels - 1);
        FeedbackPolicy p = FeedbackPolicy::constant(band, grid, sigma);
        const double v = objective(p);
        if (v >= best_value) {
            best_value = v;
            best = p;
        }
    }

    if (!band.degenerate()) {
        const double mid = 0.5 * (band.lo() + band.hi());
        std::vector<std::vector<std::uint8_t>> starts;
        starts.emplace_back(grid.cells(), *best.constant_sigma() >= mid ? 1 : 0);
        SplitMix64 gen(stream_seed(seed, 4, 0));
        for (std::size_t r = 0; r < family.restarts; ++r) {
            std::vector<std::uint8_t> bits(grid.cells());
            for (auto& b : bits) b = static_cast<std::uint8_t>(gen() >> 63);
            starts.push_back(std::move(bits));
        }
        for (auto& start : starts) {
            FeedbackPolicy current(band, grid, start);
            double value = objective(current);
            for (std::size_t sweep = 0; sweep < family.sweeps; ++sweep) {
                bool changed = false;
                for (std::size_t c = 0; c < grid.cells(); ++c) {
                    current.flip(c);
                    const double v = objective(current);
                    if (v > value) {
                        value = v;
                        changed = true;
                    } else {
                        current.flip(c);
                    }
                }
                if (!changed) break;
            }
            if (value > best_value) {
                best_value = value;
                best = current;
            }
        }
    }

    // Fresh paths: fine increments pairwise summed give the coarse path.
    detail::Accumulator coarse;
    detail::Accumulator fine;
    std::vector<std::size_t> visits(grid.cells(), 0);
    std::vector<double> zf(2 * steps);
    std::vector<double> zc(steps);
    for (std::size_t p = 0; p < paths; ++p) {
        detail::fill_normals(zf, seed, 2, p);
        for (std::size_t k = 0; k < steps; ++k) zc[k] = (zf[2 * k] + zf[2 * k + 1]) / std::numbers::sqrt2;
        coarse.add(detail::euler_path_value(f, best, zc, [&](double t, double x, double m) {
            ++visits[grid.cell(t, x, m)];
        }));
        fine.add(detail::euler_path_value(f, best, zf, [](double, double, double) {}));
    }
    detail::Accumulator in_sample;
    in_sample.sum = best_value * static_cast<double>(train);
    in_sample.count = train;

    McPolicyResult out{detail::to_estimate(coarse, steps, seed),
                       detail::to_estimate(in_sample, steps, seed),
                       best,
                       std::abs(fine.mean() - coarse.mean()),
                       std::move(visits),
                       evaluations};
    return out;
}

struct AndersonResult {
    McEstimate shifted;   ///< P(sup |B + y| <= x)
    McEstimate centered;  ///< P(sup |B| <= x)
    McEstimate terminal;  ///< P(|y + B(1)| <= x)
    double difference_std_error = 0.0;  ///< standard error of shifted - centered on common paths
};

/// Shifted versus centered small-ball probabilities on common random numbers.
inline AndersonResult anderson_shift_check(double y, double x, std::size_t paths, std::size_t steps,
                                           std::uint64_t seed) {
    if (paths < 100) throw std::invalid_argument("anderson_shift_check: at least 100 paths required");
    if (steps < 1) throw std::invalid_argument("anderson_shift_check: at least one step required");
    if (!(x > 0.0)) throw std::invalid_argument("anderson_shift_check: x must be positive");
    detail::Accumulator shifted, centered, terminal, diff;
    std::vector<double> z(steps);
    const double root_dt = 1.0 / std::sqrt(static_cast<double>(steps));
    for (std::size_t p = 0; p < paths; ++p) {
        detail::fill_normals(z, seed, 5, p);
        double b = 0.0;
        bool in_shifted = std::abs(y) <= x;
        bool in_centered = true;
        for (double zk : z) {
            b += root_dt * zk;
            in_shifted = in_shifted && std::abs(b + y) <= x;
            in_centered = in_centered && std::abs(b) <= x;
        }
        const double a = in_shifted ? 1.0 : 0.0;
        const double c = in_centered ? 1.0 : 0.0;
        shifted.add(a);
        centered.add(c);
        terminal.add(std::abs(y + b) <= x ? 1.0 : 0.0);
        diff.add(a - c);
    }
    return {detail::to_estimate(shifted, steps, seed), detail::to_estimate(centered, steps, seed),
            detail::to_estimate(terminal, steps, seed), diff.std_error()};
}

}  // namespace gexp
