/**
 * @file gheat.hpp
 * @brief Explicit monotone finite differences for the G-heat equation
 *
 *   d_t u - G(d_xx u) = 0,  u(0, x) = phi(x),
 *
 * whose solution is u(t, x) = E[phi(x + sqrt(t) X)] for G-normal X.
 */
#pragma once

#include <algorithm>
#include <functional>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gexp/core.hpp"
#include "gexp/parallel.hpp"

namespace gexp {

/// Largest sigma_hi^2 dt / dx^2 the solver accepts.
inline constexpr double max_cfl_ratio = 0.9;

struct PdeGrid {
    double half_width = 8.0;
    std::size_t points = 801;
    double horizon = 1.0;
    std::size_t time_steps = 1;

    double dx() const { return 2.0 * half_width / static_cast<double>(points - 1); }
    double dt() const { return horizon / static_cast<double>(time_steps); }
    double cfl(const VolatilityBand& band) const { return band.hi() * band.hi() * dt() / (dx() * dx()); }

    /// Grid whose time step realizes the CFL ratio lambda (or slightly below it).
    static PdeGrid with_cfl(const VolatilityBand& band, double half_width = 8.0, std::size_t points = 801,
                            double horizon = 1.0, double lambda = 0.45) {
        if (points < 3) throw std::invalid_argument("PdeGrid: need at least 3 points");
        PdeGrid g{half_width, points, horizon, 1};
        const double var = band.hi() * band.hi() * horizon;
        if (var > 0.0 && horizon > 0.0) {
            g.time_steps = static_cast<std::size_t>(std::ceil(var / (lambda * g.dx() * g.dx()) - 1e-9));
            g.time_steps = std::max<std::size_t>(g.time_steps, 1);
        }
        return g;
    }

    /// 2M - 1 points with the same CFL ratio.
    PdeGrid refined() const { return {half_width, 2 * points - 1, horizon, 4 * time_steps}; }
};

struct SolutionField {
    std::vector<double> values;
    PdeGrid grid;
    double cfl = 0.0;
    /// Largest |dt G(u_xx)| seen next to the boundary; nonzero means the truncation was felt there.
    double boundary_activity = 0.0;
    /// phi grows at infinity and was solved on a truncated domain.
    bool truncated_domain = false;

    double x(std::size_t j) const { return -grid.half_width + static_cast<double>(j) * grid.dx(); }

    /// Linear interpolation; x must lie inside the grid.
    double at(double x) const {
        const double u = (x + grid.half_width) / grid.dx();
        if (u < -1e-9 || u > static_cast<double>(grid.points - 1) + 1e-9) {
            throw std::out_of_range("SolutionField::at: x outside the grid");
        }
        auto j = static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(grid.points - 1)));
        if (j >= grid.points - 1) j = grid.points - 2;
        const double w = std::clamp(u - static_cast<double>(j), 0.0, 1.0);
        return (1.0 - w) * values[j] + w * values[j + 1];
    }
};

inline SolutionField solve_gheat(const ScalarTestFunction& phi, const VolatilityBand& band, const PdeGrid& grid) {
    if (grid.points < 3) throw std::invalid_argument("solve_gheat: need at least 3 points");
    const double lambda = grid.cfl(band);
    if (lambda > max_cfl_ratio) {
        throw std::invalid_argument("solve_gheat: CFL ratio " + std::to_string(lambda) + " exceeds " +
                                    std::to_string(max_cfl_ratio));
    }
    const double need = 6.0 * band.hi() * std::sqrt(grid.horizon);
    if (grid.half_width < need) {
        throw std::invalid_argument("solve_gheat: half width " + std::to_string(grid.half_width) +
                                    " below 6 sigma_hi sqrt(T) = " + std::to_string(need));
    }
    SolutionField field;
    field.grid = grid;
    field.cfl = lambda;
    field.truncated_domain = !phi.bounded && phi.growth_order >= 1;
    const std::size_t m = grid.points;
    std::vector<double> u(m), next(m);
    for (std::size_t j = 0; j < m; ++j) {
        u[j] = phi(field.x(j));
        if (!std::isfinite(u[j])) {
            throw std::invalid_argument("solve_gheat: phi is not finite at x = " + std::to_string(field.x(j)));
        }
    }
    const double dt = grid.dt();
    const double inv_dx2 = 1.0 / (grid.dx() * grid.dx());
    for (std::size_t step = 0; step < grid.time_steps; ++step) {
        parallel_for(
            1, m - 1,
            [&](std::size_t j) { next[j] = u[j] + dt * g_eval(band, (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_dx2); },
            8192);
        field.boundary_activity =
            std::max({field.boundary_activity, std::abs(next[1] - u[1]), std::abs(next[m - 2] - u[m - 2])});
        next[0] = 2.0 * next[1] - next[2];
        next[m - 1] = 2.0 * next[m - 2] - next[m - 3];
        std::swap(u, next);
    }
    field.values = std::move(u);
    return field;
}

struct PdeValue {
    UpperLowerPair pair;
    double tol = 0.0;
    double richardson_delta = 0.0;
    PdeGrid grid;
};

/// Floor on the advertised PDE tolerance.
inline constexpr double pde_min_tol = 1e-7;

/**
 * (E[phi(sqrt(T) X)], -E[-phi(sqrt(T) X)]) at x = 0 from the refined grid;
 * tolerance from the coarse/refined difference.
 */
inline PdeValue gnormal_pair(const ScalarTestFunction& phi, const VolatilityBand& band, const PdeGrid& grid) {
    const ScalarTestFunction neg = phi.negated();
    const PdeGrid fine = grid.refined();
    const double up_c = solve_gheat(phi, band, grid).at(0.0);
    const double lo_c = -solve_gheat(neg, band, grid).at(0.0);
    const double up_f = solve_gheat(phi, band, fine).at(0.0);
    const double lo_f = -solve_gheat(neg, band, fine).at(0.0);
    PdeValue out;
    out.pair = {up_f, lo_f};
    out.richardson_delta = std::max(std::abs(up_f - up_c), std::abs(lo_f - lo_c));
    out.tol = std::max(out.richardson_delta, pde_min_tol);
    out.grid = fine;
    return out;
}

inline PdeValue gnormal_pair(const ScalarTestFunction& phi, const VolatilityBand& band) {
    return gnormal_pair(phi, band, PdeGrid::with_cfl(band));
}

/**
 * (E[phi(W(t1), W(t1 + t2))], its conjugate) for G-Brownian motion W by
 * nested solves: an inner G-heat solve of y -> phi(a, a + y) over t2 at
 * every outer node a, then an outer solve of the resulting function over t1.
 * Tolerance from a points vs 2 points - 1 comparison.
 */
inline PdeValue gbm_two_time_pair(const std::function<double(double, double)>& phi, const VolatilityBand& band,
                                  double t1, double t2, std::size_t points = 201, double half_width = 8.0) {
    if (!(t1 > 0.0) || !(t2 > 0.0)) throw std::invalid_argument("gbm_two_time_pair: times must be positive");
    const auto nested = [&](std::size_t m, double sign) {
        const PdeGrid outer = PdeGrid::with_cfl(band, half_width, m, t1);
        const PdeGrid inner = PdeGrid::with_cfl(band, half_width, m, t2);
        std::vector<double> psi(m);
        parallel_for(
            0, m,
            [&](std::size_t j) {
                const double a = -half_width + static_cast<double>(j) * outer.dx();
                const ScalarTestFunction slice{[&, a](double y) { return sign * phi(a, a + y); }, 1.0, 0, true, ""};
                psi[j] = solve_gheat(slice, band, inner).at(0.0);
            },
            1);
        const ScalarTestFunction interp{[&](double x) {
                                            const double u = (x + half_width) / outer.dx();
                                            auto j = static_cast<std::size_t>(std::clamp(u, 0.0, double(m - 1)));
                                            if (j >= m - 1) j = m - 2;
                                            const double w = u - static_cast<double>(j);
                                            return (1.0 - w) * psi[j] + w * psi[j + 1];
                                        },
                                        1.0, 0, true, ""};
        return sign * solve_gheat(interp, band, outer).at(0.0);
    };
    const std::size_t fine_points = 2 * points - 1;
    PdeValue out;
    out.pair = {nested(fine_points, 1.0), nested(fine_points, -1.0)};
    const double up_c = nested(points, 1.0);
    const double lo_c = nested(points, -1.0);
    out.richardson_delta = std::max(std::abs(out.pair.upper - up_c), std::abs(out.pair.lower - lo_c));
    out.tol = std::max(out.richardson_delta, pde_min_tol);
    out.grid = PdeGrid::with_cfl(band, half_width, fine_points, t1);
    return out;
}

}  // namespace gexp
