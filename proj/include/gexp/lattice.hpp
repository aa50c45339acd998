/**
 * @file lattice.hpp
 * @brief Random walks with volatility ambiguity: exact adversarial tree,
 *        interpolating backward induction, capacity brackets and sampling.
 *
 * Each step X_k has law (delta_{sigma} + delta_{-sigma}) / 2 with sigma
 * chosen adversarially given the past, so
 *   E[phi(x + X)] = max_sigma (phi(x + sigma h) + phi(x - sigma h)) / 2
 * and the n-step value follows by iterating this one-step operator.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gexp/core.hpp"
#include "gexp/parallel.hpp"
#include "gexp/random.hpp"

namespace gexp {

enum class Extremum { sup, inf };

/// Symmetric two-point step laws indexed by a volatility grid inside the band.
class StepFamily {
public:
    StepFamily(VolatilityBand band, std::size_t k) : band_(band) {
        if (k < 1) throw std::invalid_argument("StepFamily needs at least one volatility");
        if (k == 1 && !band.degenerate()) throw std::invalid_argument("StepFamily K=1 requires a degenerate band");
        sigmas_.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            sigmas_[i] = k == 1 ? band.hi()
                                : band.lo() + band.width() * static_cast<double>(i) / static_cast<double>(k - 1);
        }
        sigmas_.back() = band.hi();
    }

    StepFamily(VolatilityBand band, std::vector<double> sigmas) : band_(band), sigmas_(std::move(sigmas)) {
        if (sigmas_.empty()) throw std::invalid_argument("StepFamily needs at least one volatility");
        if (!std::is_sorted(sigmas_.begin(), sigmas_.end())) {
            throw std::invalid_argument("StepFamily sigma grid must be ascending");
        }
        for (double s : sigmas_) {
            if (!band.contains(s, 0.0)) throw std::invalid_argument("StepFamily sigma outside band");
        }
        if (sigmas_.front() != band.lo() || sigmas_.back() != band.hi()) {
            throw std::invalid_argument("StepFamily sigma grid must contain both band endpoints");
        }
    }

    const VolatilityBand& band() const noexcept { return band_; }
    std::span<const double> sigma_grid() const noexcept { return sigmas_; }
    std::size_t size() const noexcept { return sigmas_.size(); }

private:
    VolatilityBand band_;
    std::vector<double> sigmas_;
};

enum class Scale { raw, sqrt_n };

struct WalkSpec {
    std::size_t n = 1;
    StepFamily family;
    Scale scale = Scale::sqrt_n;

    /// Step multiplier h: positions move by sigma * h.
    double step() const { return scale == Scale::sqrt_n ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0; }
    /// Scale on which the walk spreads after n steps (1 for sqrt_n, sqrt(n) for raw).
    double spread() const { return scale == Scale::sqrt_n ? 1.0 : std::sqrt(static_cast<double>(n)); }
    void validate() const {
        if (n < 1) throw std::invalid_argument("WalkSpec: n must be at least 1");
    }
};

/// Uniform symmetric position grid; x_j = (j - c) * spacing with c = (points - 1) / 2.
struct SpatialGrid {
    double half_width = 6.0;
    std::size_t points = 201;

    double spacing() const { return 2.0 * half_width / static_cast<double>(points - 1); }
    std::size_t center() const { return (points - 1) / 2; }
    SpatialGrid refined() const { return {half_width, 2 * points - 1}; }

    void validate(const WalkSpec& spec) const {
        if (points < 201) throw std::invalid_argument("SpatialGrid: at least 201 points required");
        if (points % 2 == 0) throw std::invalid_argument("SpatialGrid: point count must be odd");
        const double need = 6.0 * spec.family.band().hi() * spec.spread();
        if (half_width < need * (1.0 - 1e-12)) {
            throw std::invalid_argument("SpatialGrid: half width " + std::to_string(half_width) +
                                        " does not cover 6 sigma_hi = " + std::to_string(need));
        }
    }

    /**
     * Grid with spacing sigma_hi * h / nodes_per_step, so the largest step
     * lands on grid nodes (and so does sigma_lo when the ratio is rational
     * with a compatible denominator).
     */
    static SpatialGrid aligned(const WalkSpec& spec, std::size_t nodes_per_step = 2, double width_sigmas = 6.0) {
        if (nodes_per_step < 1) throw std::invalid_argument("aligned grid: nodes_per_step must be positive");
        const double hi = spec.family.band().hi();
        const double ref = hi > 0.0 ? hi : 1.0;
        const double dx = ref * spec.step() / static_cast<double>(nodes_per_step);
        const double need = width_sigmas * ref * spec.spread();
        auto half = static_cast<std::size_t>(std::ceil(need / dx - 1e-9));
        half = std::max<std::size_t>(half, 100);
        return {static_cast<double>(half) * dx, 2 * half + 1};
    }
};

struct RefinementInfo {
    std::size_t coarse_points = 0;
    std::size_t fine_points = 0;
    double richardson_delta = 0.0;
    std::size_t boundary_hits = 0;
    std::size_t envelope_updates = 0;
};

/// Backend result: the (upper, lower) pair and the tolerance the backend stands behind.
struct DPValue {
    UpperLowerPair pair;
    double backend_tol = 0.0;
    RefinementInfo refinement;
};

// ---------------------------------------------------------------------------
// One step
// ---------------------------------------------------------------------------

struct OneStepResult {
    double value = 0.0;
    double sigma = 0.0;
};

/**
 * sup (or inf) over the band of (psi(sigma h) + psi(-sigma h)) / 2: scan the
 * family grid, then ternary-search the grid segments around the best node.
 * Ties go to the larger sigma.
 */
inline OneStepResult one_step_extremum(const ScalarTestFunction& psi, const StepFamily& family, double h,
                                       Extremum ext = Extremum::sup) {
    if (!(h > 0.0)) throw std::invalid_argument("one_step: step scale must be positive");
    const double sign = ext == Extremum::sup ? 1.0 : -1.0;
    const auto objective = [&](double s) { return sign * 0.5 * (psi(s * h) + psi(-s * h)); };
    const auto grid = family.sigma_grid();
    std::size_t best_i = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = objective(grid[i]);
        if (v >= best) {
            best = v;
            best_i = i;
        }
    }
    OneStepResult out{best, grid[best_i]};
    const double band_width = family.band().width();
    if (band_width > 0.0) {
        double a = grid[best_i > 0 ? best_i - 1 : 0];
        double b = grid[std::min(best_i + 1, grid.size() - 1)];
        const double target = 1e-6 * band_width;
        while (b - a > target) {
            const double m1 = a + (b - a) / 3.0;
            const double m2 = b - (b - a) / 3.0;
            if (objective(m1) > objective(m2)) {
                b = m2;
            } else {
                a = m1;
            }
        }
        const double s = 0.5 * (a + b);
        const double v = objective(s);
        if (v > out.value) out = {v, s};
    }
    out.value *= sign;
    return out;
}

inline double one_step_upper(const ScalarTestFunction& psi, const StepFamily& family, double h) {
    return one_step_extremum(psi, family, h, Extremum::sup).value;
}

// ---------------------------------------------------------------------------
// Exact adversarial tree
// ---------------------------------------------------------------------------

/// Largest n * ceil(log2(2K)) the exact enumerator accepts.
inline constexpr std::size_t exact_tree_budget_bits = 26;

inline std::size_t exact_tree_bits(std::size_t n, std::size_t k) {
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < 2 * k) ++bits;
    return n * bits;
}

namespace detail {

class ExactTree {
public:
    ExactTree(const WalkSpec& spec, const PathFunctional& f)
        : n_(spec.n), h_(spec.step()), sigmas_(spec.family.sigma_grid()), f_(f) {}

    std::pair<double, double> value() const { return node(0, 0.0, f_.init_summary()); }

private:
    std::pair<double, double> node(std::size_t k, double x, double s) const {
        if (k == n_) {
            const double v = f_.terminal(s, x);
            return {v, v};
        }
        double up = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        for (double sigma : sigmas_) {
            const double xp = x + sigma * h_;
            const double xm = x - sigma * h_;
            const auto a = node(k + 1, xp, f_.update(s, k + 1, xp));
            const auto b = node(k + 1, xm, f_.update(s, k + 1, xm));
            up = std::max(up, 0.5 * (a.first + b.first));
            lo = std::min(lo, 0.5 * (a.second + b.second));
        }
        return {up, lo};
    }

    std::size_t n_;
    double h_;
    std::span<const double> sigmas_;
    const PathFunctional& f_;
};

}  // namespace detail

/**
 * Upper and lower expectation by backward recursion over the full
 * non-recombining (2K)^n tree. Exact up to rounding.
 */
inline DPValue exact_walk_value(const WalkSpec& spec, const PathFunctional& f) {
    spec.validate();
    const std::size_t k = spec.family.size();
    if (k < 2) throw std::invalid_argument("exact_walk_value: family needs K >= 2 volatilities");
    const std::size_t bits = exact_tree_bits(spec.n, k);
    if (bits > exact_tree_budget_bits) {
        throw std::invalid_argument("exact_walk_value: n*ceil(log2(2K)) = " + std::to_string(bits) +
                                    " exceeds the enumeration bound " + std::to_string(exact_tree_budget_bits));
    }
    const auto [up, lo] = detail::ExactTree(spec, f).value();
    DPValue out;
    out.pair = {up, lo};
    out.backend_tol = 1e-12 * std::max({1.0, std::abs(up), std::abs(lo)});
    return out;
}

// ---------------------------------------------------------------------------
// Grid backward induction
// ---------------------------------------------------------------------------

enum class SigmaSearch {
    band,   ///< exact optimum over [sigma_lo, sigma_hi] of the interpolated objective
    family  ///< only the volatilities of the step family
};

struct GridOptions {
    SigmaSearch search = SigmaSearch::band;
    bool compute_lower = true;
    double min_tol = 1e-4;
    double max_boundary_fraction = 1e-3;
};

namespace detail {

struct SolveStats {
    std::size_t boundary_hits = 0;
    std::size_t envelope_updates = 0;
};

/**
 * One backward-induction solve on one grid. All positions are handled in
 * index units p = x / dx + c; candidate step sizes are index offsets.
 */
class GridSolver {
public:
    GridSolver(const WalkSpec& spec, const SpatialGrid& grid, const PathFunctional& f,
               std::vector<double> offsets, Extremum ext)
        : n_(spec.n),
          m_(grid.points),
          c_(grid.center()),
          dx_(grid.spacing()),
          f_(f),
          offsets_(std::move(offsets)),
          sup_(ext == Extremum::sup) {
        max_offset_ = offsets_.empty() ? 0.0 : *std::max_element(offsets_.begin(), offsets_.end());
    }

    double solve(SolveStats& stats) {
        switch (f_.kind) {
        case SummaryKind::none:
            return solve_terminal(stats);
        case SummaryKind::running_abs_max:
        case SummaryKind::running_max:
            return solve_running(stats);
        case SummaryKind::snapshot:
            return f_.snapshot_step == 0 || f_.snapshot_step > n_ ? solve_terminal(stats) : solve_snapshot(stats);
        case SummaryKind::custom:
            break;
        }
        throw UnsupportedError("grid_walk_value: custom summaries are unsupported");
    }

private:
    double x_of(std::size_t j) const { return (static_cast<double>(j) - static_cast<double>(c_)) * dx_; }

    /// Radius of updated nodes at step k; R_k + max_offset <= R_{k+1} keeps every bracket node current.
    std::size_t cone(std::size_t k) const {
        const double r = static_cast<double>(k) * std::ceil(max_offset_ - 1e-9) + 1.0;
        return static_cast<std::size_t>(std::min(r, static_cast<double>(c_)));
    }

    double envelope(std::size_t k) const { return 6.0 * max_offset_ * std::sqrt(static_cast<double>(k)) + 1.0; }

    struct Child {
        double p;
        bool hit;
    };

    Child child(std::size_t j, double e) const {
        double p = static_cast<double>(j) + e;
        const double top = static_cast<double>(m_ - 1);
        if (p < 0.0) return {0.0, true};
        if (p > top) return {top, true};
        return {p, false};
    }

    /// Linear interpolation of row at index position p (p inside [0, m-1]).
    double interp(const double* row, double p) const {
        auto jl = static_cast<std::size_t>(p);
        if (jl >= m_ - 1) jl = m_ - 2;
        const double w = p - static_cast<double>(jl);
        return w == 0.0 ? row[jl] : (1.0 - w) * row[jl] + w * row[jl + 1];
    }

    bool better(double v, double best) const { return sup_ ? v > best : v < best; }
    double worst() const {
        return sup_ ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    }

    /// Optimizes over offsets the average of child(+e) and child(-e) given by eval(p).
    template <class Eval>
    double optimize(std::size_t j, bool in_envelope, SolveStats& local, Eval&& eval) const {
        double best = worst();
        for (double e : offsets_) {
            const Child a = child(j, e);
            const Child b = child(j, -e);
            if (in_envelope) {
                local.envelope_updates += 2;
                local.boundary_hits += static_cast<std::size_t>(a.hit) + static_cast<std::size_t>(b.hit);
            }
            const double v = 0.5 * (eval(a.p) + eval(b.p));
            if (better(v, best) || v == best) best = v;
        }
        return best;
    }

    double solve_terminal(SolveStats& stats) {
        std::vector<double> next(m_), cur(m_);
        for (std::size_t j = 0; j < m_; ++j) next[j] = f_.terminal(0.0, x_of(j));
        for (std::size_t k = n_; k-- > 0;) {
            const std::size_t r = cone(k);
            const double env = envelope(k);
            const double* row = next.data();
            for (std::size_t j = c_ - r; j <= c_ + r; ++j) {
                const bool in_env = std::abs(static_cast<double>(j) - static_cast<double>(c_)) <= env;
                cur[j] = optimize(j, in_env, stats, [&](double p) { return interp(row, p); });
            }
            std::swap(next, cur);
        }
        return next[c_];
    }

    /// Running max of |x| (abs) or of x with S_0 = 0; rows are summary nodes s_i = i dx.
    double solve_running(SolveStats& stats) {
        const bool abs_kind = f_.kind == SummaryKind::running_abs_max;
        std::size_t cap = c_;
        if (f_.saturation) {
            const double sat = std::max(*f_.saturation, 0.0);
            cap = static_cast<std::size_t>(std::min(std::ceil(sat / dx_ - 1e-9), static_cast<double>(c_)));
        }
        const std::size_t rows = cap + 1;
        std::vector<double> next(rows * m_, 0.0), cur(rows * m_, 0.0);
        const auto lo_col = [&](std::size_t i) -> std::size_t { return (i == cap || !abs_kind) ? 0 : c_ - i; };
        const auto hi_col = [&](std::size_t i) -> std::size_t { return i == cap ? m_ - 1 : c_ + i; };
        for (std::size_t i = 0; i < rows; ++i) {
            const double s = static_cast<double>(i) * dx_;
            for (std::size_t j = lo_col(i); j <= hi_col(i); ++j) next[i * m_ + j] = f_.terminal(s, x_of(j));
        }
        const auto cd = static_cast<double>(c_);
        const auto capd = static_cast<double>(cap);
        for (std::size_t k = n_; k-- > 0;) {
            const std::size_t r = cone(k);
            const double env = envelope(k);
            const double* v = next.data();
            const auto diag = [&](std::size_t j) {
                const auto jd = static_cast<double>(j);
                const auto i = static_cast<std::size_t>(std::abs(jd - cd));
                return v[i * m_ + j];
            };
            const auto eval_row = [&](std::size_t i, double p) {
                const double a = abs_kind ? std::abs(p - cd) : p - cd;
                const auto id = static_cast<double>(i);
                if (i == cap || a <= id) return interp(v + i * m_, p);
                if (a >= capd) return interp(v + cap * m_, p);
                auto jl = static_cast<std::size_t>(p);
                const double w = p - static_cast<double>(jl);
                return w == 0.0 ? diag(jl) : (1.0 - w) * diag(jl) + w * diag(jl + 1);
            };
            const std::size_t top_row = std::min(r, cap);
            for (std::size_t i = 0; i <= top_row; ++i) {
                std::size_t jlo = std::max(lo_col(i), c_ - r);
                std::size_t jhi = std::min(hi_col(i), c_ + r);
                for (std::size_t j = jlo; j <= jhi; ++j) {
                    const bool in_env = std::abs(static_cast<double>(j) - cd) <= env;
                    cur[i * m_ + j] = optimize(j, in_env, stats, [&](double p) { return eval_row(i, p); });
                }
            }
            std::swap(next, cur);
        }
        return next[c_];
    }

    /// Summary is S_{k0}; two-dimensional after k0, one-dimensional before.
    double solve_snapshot(SolveStats& stats) {
        const std::size_t k0 = f_.snapshot_step;
        std::vector<double> next(m_ * m_, 0.0), cur(m_ * m_, 0.0);
        const std::size_t r0 = cone(k0);
        for (std::size_t i = c_ - r0; i <= c_ + r0; ++i) {
            for (std::size_t j = 0; j < m_; ++j) next[i * m_ + j] = f_.terminal(x_of(i), x_of(j));
        }
        const auto cd = static_cast<double>(c_);
        for (std::size_t k = n_; k-- > k0;) {
            const std::size_t r = cone(k);
            const double env = envelope(k);
            const double* v = next.data();
            for (std::size_t i = c_ - r0; i <= c_ + r0; ++i) {
                const double* row = v + i * m_;
                for (std::size_t j = c_ - r; j <= c_ + r; ++j) {
                    const bool in_env = std::abs(static_cast<double>(j) - cd) <= env;
                    cur[i * m_ + j] = optimize(j, in_env, stats, [&](double p) { return interp(row, p); });
                }
            }
            std::swap(next, cur);
        }
        std::vector<double> line(m_, 0.0), line_cur(m_, 0.0);
        for (std::size_t j = c_ - r0; j <= c_ + r0; ++j) line[j] = next[j * m_ + j];
        for (std::size_t k = k0; k-- > 0;) {
            const std::size_t r = cone(k);
            const double env = envelope(k);
            const double* row = line.data();
            for (std::size_t j = c_ - r; j <= c_ + r; ++j) {
                const bool in_env = std::abs(static_cast<double>(j) - cd) <= env;
                line_cur[j] = optimize(j, in_env, stats, [&](double p) { return interp(row, p); });
            }
            std::swap(line, line_cur);
        }
        return line[c_];
    }

    std::size_t n_;
    std::size_t m_;
    std::size_t c_;
    double dx_;
    const PathFunctional& f_;
    std::vector<double> offsets_;
    double max_offset_ = 0.0;
    bool sup_;
};

/**
 * Candidate step offsets in grid index units. On the band, the interpolated
 * one-step objective is piecewise linear in sigma with kinks only where a
 * child hits a grid node, so the endpoints plus those kinks contain the optimum.
 */
inline std::vector<double> candidate_offsets(const WalkSpec& spec, const SpatialGrid& grid, SigmaSearch search) {
    const double unit = spec.step() / grid.spacing();
    std::vector<double> out;
    const auto snap = [](double e) {
        const double r = std::round(e);
        return std::abs(e - r) < 1e-9 ? r : e;
    };
    if (search == SigmaSearch::family) {
        for (double s : spec.family.sigma_grid()) out.push_back(snap(s * unit));
    } else {
        const double lo = snap(spec.family.band().lo() * unit);
        const double hi = snap(spec.family.band().hi() * unit);
        out.push_back(lo);
        for (double q = std::floor(lo) + 1.0; q < hi; q += 1.0) {
            if (q > lo) out.push_back(q);
        }
        out.push_back(hi);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline double solve_on(const WalkSpec& spec, const SpatialGrid& grid, const PathFunctional& f, SigmaSearch search,
                       Extremum ext, double max_fraction, RefinementInfo& info) {
    SolveStats stats;
    GridSolver solver(spec, grid, f, candidate_offsets(spec, grid, search), ext);
    const double v = solver.solve(stats);
    info.boundary_hits += stats.boundary_hits;
    info.envelope_updates += stats.envelope_updates;
    if (stats.envelope_updates > 0 &&
        static_cast<double>(stats.boundary_hits) > max_fraction * static_cast<double>(stats.envelope_updates)) {
        throw NumericalError("grid_walk_value: boundary clamped " + std::to_string(stats.boundary_hits) + " of " +
                             std::to_string(stats.envelope_updates) + " updates; widen the grid");
    }
    return v;
}

}  // namespace detail

/**
 * Upper and lower expectation of f over the walk by backward induction on
 * a position grid (plus a summary grid for two-dimensional functionals).
 * The result comes from the refined grid (2M - 1 points); the advertised
 * tolerance is max(|coarse - refined|, options.min_tol).
 */
inline DPValue grid_walk_value(const WalkSpec& spec, const SpatialGrid& grid, const PathFunctional& f,
                               const GridOptions& options = {}) {
    spec.validate();
    grid.validate(spec);
    if (f.summary_dimension() > 2) {
        throw UnsupportedError("grid_walk_value: summary dimension " + std::to_string(f.summary_dimension()) +
                               " is unsupported (max 2)");
    }
    if (f.kind == SummaryKind::custom) throw UnsupportedError("grid_walk_value: custom summaries are unsupported");

    DPValue out;
    const SpatialGrid fine = grid.refined();
    out.refinement.coarse_points = grid.points;
    out.refinement.fine_points = fine.points;
    const auto run = [&](Extremum ext) {
        const double coarse =
            detail::solve_on(spec, grid, f, options.search, ext, options.max_boundary_fraction, out.refinement);
        const double refined =
            detail::solve_on(spec, fine, f, options.search, ext, options.max_boundary_fraction, out.refinement);
        out.refinement.richardson_delta = std::max(out.refinement.richardson_delta, std::abs(refined - coarse));
        return refined;
    };
    out.pair.upper = run(Extremum::sup);
    out.pair.lower = options.compute_lower ? run(Extremum::inf) : std::numeric_limits<double>::quiet_NaN();
    out.backend_tol = std::max(out.refinement.richardson_delta, options.min_tol);
    return out;
}

// ---------------------------------------------------------------------------
// Capacities of path events
// ---------------------------------------------------------------------------

enum class Statistic { abs_max, max };

/// Event {statistic <= threshold} (below) or {statistic >= threshold} (above).
struct EventSpec {
    Statistic statistic = Statistic::abs_max;
    double threshold = 1.0;
    Direction direction = Direction::below;
    RampWidth width_mode = RampWidth::relative;
};

/// Majorant (outer) and minorant (inner) path functionals of an event.
struct RampedEvent {
    PathFunctional outer;
    PathFunctional inner;
    double ramp_width = 0.0;
    double threshold = 0.0;
};

inline RampedEvent ramp_event(const EventSpec& event, double delta) {
    const RampPair ramps = mollified_indicator(event.threshold, event.direction, delta, event.width_mode);
    const double saturation = std::max(event.threshold + ramps.width, 0.0);
    auto make = [&](const ScalarTestFunction& g, const std::string& tag) {
        return event.statistic == Statistic::abs_max ? PathFunctional::of_abs_max(g.evaluator, saturation, tag)
                                                     : PathFunctional::of_max(g.evaluator, saturation, tag);
    };
    return {make(ramps.outer, "outer"), make(ramps.inner, "inner"), ramps.width, event.threshold};
}

enum class Backend { exact, grid };

struct CapacityBackend {
    Backend kind = Backend::grid;
    std::optional<SpatialGrid> grid;  ///< defaults to SpatialGrid::aligned(spec, nodes_per_step)
    std::size_t nodes_per_step = 2;
    GridOptions options{};
};

/**
 * Capacity brackets: E[inner] <= V(A) <= E[outer] for the upper capacity
 * and the conjugate values for the lower capacity v(A) = 1 - V(A^c).
 */
struct CapacityBracket {
    Interval upper_cap;
    Interval lower_cap;
    double delta = 0.0;
    double ramp_width = 0.0;
    double backend_tol = 0.0;
    double threshold_nodes = std::numeric_limits<double>::infinity();  ///< |threshold| / grid spacing

    double width() const noexcept { return std::max(upper_cap.width(), lower_cap.width()); }
    bool upper_contains(double ref, double widen = 0.0) const noexcept {
        return upper_cap.contains(ref, widen + backend_tol);
    }
    bool lower_contains(double ref, double widen = 0.0) const noexcept {
        return lower_cap.contains(ref, widen + backend_tol);
    }
};

inline CapacityBracket capacity_bracket(const WalkSpec& spec, const RampedEvent& event,
                                        const CapacityBackend& backend = {}) {
    CapacityBracket out;
    out.ramp_width = event.ramp_width;
    DPValue outer;
    DPValue inner;
    if (backend.kind == Backend::exact) {
        outer = exact_walk_value(spec, event.outer);
        inner = exact_walk_value(spec, event.inner);
    } else {
        const SpatialGrid grid = backend.grid.value_or(SpatialGrid::aligned(spec, backend.nodes_per_step));
        GridOptions opts = backend.options;
        opts.compute_lower = true;
        outer = grid_walk_value(spec, grid, event.outer, opts);
        inner = grid_walk_value(spec, grid, event.inner, opts);
        out.threshold_nodes = std::abs(event.threshold) / grid.refined().spacing();
    }
    out.upper_cap = {inner.pair.upper, outer.pair.upper};
    out.lower_cap = {inner.pair.lower, outer.pair.lower};
    out.backend_tol = std::max(outer.backend_tol, inner.backend_tol);
    return out;
}

inline CapacityBracket walk_capacity(const WalkSpec& spec, const EventSpec& event, double delta,
                                     const CapacityBackend& backend = {}) {
    CapacityBracket out = capacity_bracket(spec, ramp_event(event, delta), backend);
    out.delta = delta;
    return out;
}

// ---------------------------------------------------------------------------
// Sampling under a single measure
// ---------------------------------------------------------------------------

/// Piecewise-linear path on [0, 1] through (k / n, W_n(k / n)).
struct WalkPath {
    std::vector<double> times;
    std::vector<double> values;

    double operator()(double t) const {
        if (t <= 0.0) return values.front();
        if (t >= 1.0) return values.back();
        const double u = t * static_cast<double>(times.size() - 1);
        const auto k = static_cast<std::size_t>(u);
        const double w = u - static_cast<double>(k);
        return (1.0 - w) * values[k] + w * values[k + 1];
    }
};

/// sigma_k for step k given S_{k-1} and max_{j<k} |S_j|.
using VolatilityPolicy = std::function<double(std::size_t k, double position, double running_abs_max)>;

/**
 * W_n polyline (positions S_k / sqrt(n)) driven by Rademacher signs drawn
 * from gen (upper half of the generator range means +1).
 */
template <class URBG>
WalkPath sample_walk_path(const WalkSpec& spec, const VolatilityPolicy& policy, URBG& gen) {
    spec.validate();
    const std::size_t n = spec.n;
    const double root = std::sqrt(static_cast<double>(n));
    const auto half = (URBG::max() - URBG::min()) / 2;
    WalkPath path;
    path.times.resize(n + 1);
    path.values.resize(n + 1);
    path.times[0] = 0.0;
    path.values[0] = 0.0;
    double s = 0.0;
    double running = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double sigma = policy(k, s, running);
        if (!spec.family.band().contains(sigma)) {
            throw std::invalid_argument("sample_walk_path: policy volatility " + std::to_string(sigma) +
                                        " outside band");
        }
        const bool plus = (gen() - URBG::min()) > half;
        s += plus ? sigma : -sigma;
        running = std::max(running, std::abs(s));
        path.times[k] = static_cast<double>(k) / static_cast<double>(n);
        path.values[k] = s / root;
    }
    return path;
}

inline WalkPath sample_walk_path(const WalkSpec& spec, const VolatilityPolicy& policy, std::uint64_t seed) {
    SplitMix64 gen(stream_seed(seed, 0, 0));
    return sample_walk_path(spec, policy, gen);
}

}  // namespace gexp
