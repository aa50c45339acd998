/**
 * @file core.hpp
 * @brief Sub-linear expectation primitives: volatility bands, upper/lower
 *        pairs, capacities, test functions, path functionals, mollified
 *        indicators and the axiom checker.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace gexp {

/// Raised when a computation would require an unsupported configuration.
class UnsupportedError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical method detects that its own result is unreliable.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * The ambiguity interval [sigma_lo, sigma_hi] of admissible volatilities.
 * A degenerate band (lo == hi) is the classical, unambiguous case.
 */
class VolatilityBand {
public:
    VolatilityBand(double sigma_lo, double sigma_hi) : lo_(sigma_lo), hi_(sigma_hi) {
        if (!std::isfinite(sigma_lo) || !std::isfinite(sigma_hi)) {
            throw std::invalid_argument("volatility band must be finite");
        }
        if (sigma_lo < 0.0) {
            throw std::invalid_argument("sigma_lo must be nonnegative, got " + std::to_string(sigma_lo));
        }
        if (sigma_lo > sigma_hi) {
            std::ostringstream os;
            os.precision(17);
            os << "sigma_lo > sigma_hi (sigma_lo=" << sigma_lo << ", sigma_hi=" << sigma_hi << ")";
            throw std::invalid_argument(os.str());
        }
    }

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    double width() const noexcept { return hi_ - lo_; }
    bool degenerate() const noexcept { return lo_ == hi_; }
    bool contains(double sigma, double slack = 1e-12) const noexcept {
        return sigma >= lo_ - slack && sigma <= hi_ + slack;
    }
    VolatilityBand scaled(double c) const { return {lo_ * c, hi_ * c}; }

    friend bool operator==(const VolatilityBand&, const VolatilityBand&) = default;

private:
    double lo_;
    double hi_;
};

/// G(alpha) = (sigma_hi^2 alpha^+ - sigma_lo^2 alpha^-) / 2.
inline double g_eval(const VolatilityBand& band, double alpha) noexcept {
    const double pos = std::max(alpha, 0.0);
    const double neg = std::max(-alpha, 0.0);
    return 0.5 * (band.hi() * band.hi() * pos - band.lo() * band.lo() * neg);
}

/// Lower (conjugate) expectation from the upper expectation of the negated variable.
inline double conjugate(double upper_of_negated) noexcept { return -upper_of_negated; }

/// Value of an upper expectation together with its conjugate.
struct UpperLowerPair {
    double upper = 0.0;
    double lower = 0.0;

    double spread() const noexcept { return upper - lower; }
    bool ordered(double tol) const noexcept { return lower <= upper + tol; }
};

/// Upper capacity V and lower capacity v of one event.
struct CapacityPair {
    double upper_cap = 0.0;
    double lower_cap = 0.0;

    bool valid(double tol = 0.0) const noexcept {
        return lower_cap >= -tol && upper_cap <= 1.0 + tol && lower_cap <= upper_cap + tol;
    }
};

/// Closed interval used for capacity brackets.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
    bool contains(double v, double widen = 0.0) const noexcept { return v >= lo - widen && v <= hi + widen; }
};

/**
 * Real test function with the metadata used to place it in C_{l,Lip}
 * (growth order m and local Lipschitz constant C) or C_b (bounded flag).
 */
struct ScalarTestFunction {
    std::function<double(double)> evaluator;
    double lipschitz_const = 1.0;
    unsigned growth_order = 0;
    bool bounded = false;
    std::string name;

    double operator()(double x) const { return evaluator(x); }

    ScalarTestFunction negated() const {
        auto f = evaluator;
        return {[f](double x) { return -f(x); }, lipschitz_const, growth_order, bounded, "-" + name};
    }

    /// |f(x)-f(y)| <= C (1 + |x|^m + |y|^m) |x-y| on a deterministic set of pairs in [-range, range].
    bool spot_check_growth(double range = 5.0, std::size_t pairs = 400) const {
        const double m = static_cast<double>(growth_order);
        for (std::size_t i = 0; i < pairs; ++i) {
            // Weyl sequence, no RNG needed for a spot check.
            const double u = std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
            const double v = std::fmod(0.7548776662466927 * static_cast<double>(i + 1), 1.0);
            const double x = range * (2.0 * u - 1.0);
            const double y = range * (2.0 * v - 1.0);
            const double bound = lipschitz_const * (1.0 + std::pow(std::abs(x), m) + std::pow(std::abs(y), m)) *
                                 std::abs(x - y);
            if (std::abs(evaluator(x) - evaluator(y)) > bound * (1.0 + 1e-12) + 1e-14) {
                return false;
            }
        }
        return true;
    }
};

enum class Direction { above, below };
enum class RampWidth { relative, absolute };

/// Lipschitz ramps bracketing an indicator: inner <= I_event <= outer.
struct RampPair {
    ScalarTestFunction outer;
    ScalarTestFunction inner;
    double width = 0.0;
};

/**
 * Piecewise-linear mollifiers for {y >= threshold} (above) or
 * {y <= threshold} (below). With relative width the ramps span
 * threshold*(1 -+ delta); absolute width uses delta itself.
 */
inline RampPair mollified_indicator(double threshold, Direction direction, double delta,
                                    RampWidth mode = RampWidth::relative) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("mollifier delta must be positive");
    }
    if (mode == RampWidth::relative && threshold == 0.0) {
        throw std::invalid_argument(
            "threshold 0 has no relative ramp width; use RampWidth::absolute for an absolute-width mollifier");
    }
    const double w = mode == RampWidth::relative ? delta * std::abs(threshold) : delta;
    const double lip = 1.0 / w;
    // Ramp from 0 at a to 1 at b; endpoints are hit exactly.
    const auto ramp = [w](double y, double a, double b) {
        if (a < b) {
            if (y <= a) return 0.0;
            if (y >= b) return 1.0;
            return (y - a) / w;
        }
        if (y >= a) return 0.0;
        if (y <= b) return 1.0;
        return (a - y) / w;
    };
    RampPair out;
    out.width = w;
    const double lo = threshold - w;
    const double hi = threshold + w;
    if (direction == Direction::above) {
        out.inner = {[=](double y) { return ramp(y, threshold, hi); }, lip, 0, true, "ramp_above_inner"};
        out.outer = {[=](double y) { return ramp(y, lo, threshold); }, lip, 0, true, "ramp_above_outer"};
    } else {
        out.inner = {[=](double y) { return ramp(y, threshold, lo); }, lip, 0, true, "ramp_below_inner"};
        out.outer = {[=](double y) { return ramp(y, hi, threshold); }, lip, 0, true, "ramp_below_outer"};
    }
    return out;
}

/// How a path functional summarizes the history it needs besides the current position.
enum class SummaryKind {
    none,             ///< terminal functional of the final position
    running_abs_max,  ///< max_{j<=k} |S_j|
    running_max,      ///< max_{j<=k} S_j (S_0 = 0 included)
    snapshot,         ///< S_{snapshot_step}
    custom            ///< user supplied update; exact enumeration only
};

/**
 * Functional of a discrete path in summary-state form. The value of a path
 * S_0 = 0, S_1, ..., S_n is terminal(s_n, S_n) with s_0 = init_summary()
 * and s_k = update(s_{k-1}, k, S_k).
 */
struct PathFunctional {
    SummaryKind kind = SummaryKind::none;
    std::size_t snapshot_step = 0;
    std::function<double(double summary, double position)> terminal;
    std::function<double(double summary, std::size_t k, double position)> custom_update;
    int custom_dimension = 2;
    /// For running-max kinds: terminal(s, x) does not depend on s once s >= saturation.
    std::optional<double> saturation;
    std::string name;

    double init_summary() const noexcept { return 0.0; }

    double update(double summary, std::size_t k, double position) const {
        switch (kind) {
        case SummaryKind::none:
            return summary;
        case SummaryKind::running_abs_max:
            return std::max(summary, std::abs(position));
        case SummaryKind::running_max:
            return std::max(summary, position);
        case SummaryKind::snapshot:
            return k == snapshot_step ? position : summary;
        case SummaryKind::custom:
            return custom_update(summary, k, position);
        }
        return summary;
    }

    /// Number of state components including the position carried by the engine.
    int summary_dimension() const noexcept {
        if (kind == SummaryKind::none) return 1;
        if (kind == SummaryKind::custom) return custom_dimension;
        return 2;
    }

    double evaluate(std::span<const double> positions) const {
        double s = init_summary();
        for (std::size_t k = 1; k < positions.size(); ++k) s = update(s, k, positions[k]);
        return terminal(s, positions.empty() ? 0.0 : positions.back());
    }

    static PathFunctional of_terminal(std::function<double(double)> phi, std::string name = {}) {
        PathFunctional f;
        f.kind = SummaryKind::none;
        f.terminal = [phi = std::move(phi)](double, double x) { return phi(x); };
        f.name = std::move(name);
        return f;
    }

    static PathFunctional of_abs_max(std::function<double(double)> g, std::optional<double> saturation = {},
                                     std::string name = {}) {
        PathFunctional f;
        f.kind = SummaryKind::running_abs_max;
        f.terminal = [g = std::move(g)](double s, double) { return g(s); };
        f.saturation = saturation;
        f.name = std::move(name);
        return f;
    }

    static PathFunctional of_max(std::function<double(double)> g, std::optional<double> saturation = {},
                                 std::string name = {}) {
        PathFunctional f;
        f.kind = SummaryKind::running_max;
        f.terminal = [g = std::move(g)](double s, double) { return g(s); };
        f.saturation = saturation;
        f.name = std::move(name);
        return f;
    }

    /// Copy with the terminal value mapped through h (keeps the summary structure).
    PathFunctional mapped(std::function<double(double)> h, std::string new_name = {}) const {
        PathFunctional f = *this;
        auto t = terminal;
        f.terminal = [t, h = std::move(h)](double s, double x) { return h(t(s, x)); };
        f.name = new_name.empty() ? name : std::move(new_name);
        return f;
    }
};

// ---------------------------------------------------------------------------
// Axioms
// ---------------------------------------------------------------------------

/// Backend values for one (phi, psi) pair plus the scalar probes lambda and c.
struct AxiomSample {
    double e_phi = 0.0;
    double e_psi = 0.0;
    double e_sum = 0.0;  ///< E[phi + psi]
    bool phi_dominates_psi = false;
    double lambda = 1.0;
    double e_scaled = 0.0;  ///< E[lambda phi]
    double c = 0.0;
    double e_shifted = 0.0;   ///< E[phi + c]
    double e_constant = 0.0;  ///< E[c]
};

struct AxiomCheck {
    bool pass = true;
    double worst_violation = 0.0;
    std::size_t checked = 0;

    void record(double violation, double tol) {
        ++checked;
        worst_violation = std::max(worst_violation, violation);
        if (violation > tol) pass = false;
    }
};

struct AxiomReport {
    AxiomCheck monotonicity;
    AxiomCheck constant_preserving;
    AxiomCheck subadditivity;
    AxiomCheck homogeneity;
    AxiomCheck translation;
    double tolerance = 0.0;

    bool all_pass() const noexcept {
        return monotonicity.pass && constant_preserving.pass && subadditivity.pass && homogeneity.pass &&
               translation.pass;
    }
};

inline AxiomReport axiom_report(std::span<const AxiomSample> samples, double tol) {
    if (samples.empty()) throw std::invalid_argument("axiom_report: empty input");
    AxiomReport r;
    r.tolerance = tol;
    for (const auto& s : samples) {
        if (s.phi_dominates_psi) r.monotonicity.record(s.e_psi - s.e_phi, tol);
        r.constant_preserving.record(std::abs(s.e_constant - s.c), tol);
        r.subadditivity.record(s.e_sum - (s.e_phi + s.e_psi), tol);
        if (s.lambda < 0.0) throw std::invalid_argument("axiom_report: lambda must be nonnegative");
        r.homogeneity.record(std::abs(s.e_scaled - s.lambda * s.e_phi), tol);
        r.translation.record(std::abs(s.e_shifted - (s.e_phi + s.c)), tol);
    }
    return r;
}

}  // namespace gexp
