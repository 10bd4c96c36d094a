#ifndef CATASTROPHE_RATE_HPP
#define CATASTROPHE_RATE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "errors.hpp"
#include "model.hpp"

namespace catastrophe
{

// A value in [-inf, +inf] where the infinite case is an explicit marker.
class ExtendedReal
{
public:
    static constexpr ExtendedReal infinity() { return ExtendedReal(true, 0.0); }
    static constexpr ExtendedReal finite(double v) { return ExtendedReal(false, v); }

    constexpr bool is_infinite() const { return infinite_; }
    constexpr bool is_finite() const { return !infinite_; }

    // Finite value; throws on the infinite marker.
    double value() const
    {
        if (infinite_) {
            throw std::logic_error("value() on an infinite ExtendedReal");
        }
        return value_;
    }

    double to_double() const
    {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    friend constexpr bool operator==(const ExtendedReal&, const ExtendedReal&) = default;

private:
    constexpr ExtendedReal(bool infinite, double value) : infinite_(infinite), value_(value) {}

    bool infinite_;
    double value_;
};

struct RateQuery
{
    double x = 0.0;
    ModelParams params;
};

// x ln x with the 0 ln 0 = 0 convention, scaled: x ln(x / scale).
inline double xlog_ratio(double x, double scale)
{
    return x == 0.0 ? 0.0 : x * std::log(x / scale);
}

/**
 * Rate function of the terminal value xi_T(1):
 *   +inf                                   x < 0
 *   x ln((lambda+mu)/lambda)               0 <= x < alpha
 *   x ln(x(lambda+mu)/(alpha lambda)) - x + alpha     x >= alpha
 */
inline ExtendedReal rate_I(const RateQuery& q)
{
    const auto& p = q.params;
    p.validate();
    if (q.x < 0.0) {
        return ExtendedReal::infinity();
    }
    if (q.x < p.alpha) {
        return ExtendedReal::finite(q.x * std::log((p.lambda + p.mu) / p.lambda));
    }
    return ExtendedReal::finite(xlog_ratio(q.x, p.alpha * p.lambda / (p.lambda + p.mu)) - q.x + p.alpha);
}

/**
 * Rate function of the scaled birth-stream increment (nu1(T) - nu1(T Delta)) / T,
 * the Legendre transform of a Poisson log-moment generating function with mean
 * alpha lambda (1 - Delta) / (lambda + mu).
 */
inline ExtendedReal rate_I1(double x, double window_start, const ModelParams& p)
{
    p.validate();
    if (!(window_start >= 0.0 && window_start < 1.0)) {
        throw std::invalid_argument("window start must lie in [0, 1)");
    }
    if (x < 0.0) {
        return ExtendedReal::infinity();
    }
    const double mean = p.alpha * p.lambda * (1.0 - window_start) / (p.lambda + p.mu);
    return ExtendedReal::finite(xlog_ratio(x, mean) - x + mean);
}

/**
 * f(y, z) = -y ln(y (lambda+mu) / (alpha lambda z)) + y - alpha z, the log-cost
 * of ending at level y after a catastrophe-free climb over the final fraction z
 * of the horizon. f(0, z) = -alpha z.
 */
inline double variational_f(double y, double z, const ModelParams& p)
{
    if (!(z > 0.0)) {
        throw std::invalid_argument("variational objective requires z > 0");
    }
    if (y < 0.0) {
        throw std::invalid_argument("variational objective requires y >= 0");
    }
    return -xlog_ratio(y, p.alpha * p.lambda * z / (p.lambda + p.mu)) + y - p.alpha * z;
}

struct VariationalPoint
{
    double y = 0.0;
    double z = 0.0;
    double value = 0.0;
};

struct VariationalResult
{
    double rate = 0.0;           // -sup f
    VariationalPoint argmax;
    bool z_at_boundary = false;  // optimum attained at z = 1
    int evaluations = 0;
};

namespace detail
{

/**
 * Golden-section maximization of a unimodal g on [lo, hi]. The endpoints are
 * compared with the interior result so maxima on the boundary are returned
 * exactly. Returns the argmax; `evaluations` is incremented per call of g.
 */
template <typename F>
double golden_max(F&& g, double lo, double hi, double tol, int& evaluations)
{
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = g(c);
    double gd = g(d);
    evaluations += 2;
    while (b - a > tol) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
        ++evaluations;
    }
    double best = gc >= gd ? c : d;
    double best_value = std::max(gc, gd);
    for (double edge : {lo, hi}) {
        const double v = g(edge);
        ++evaluations;
        if (v >= best_value) {
            best = edge;
            best_value = v;
        }
    }
    return best;
}

} // namespace detail

/**
 * Evaluates the rate as -sup_{z in (0,1]} sup_{y >= x} f(y, z) numerically.
 *
 * A coarse log-spaced (y, z) grid picks the start point, then alternating
 * golden-section searches in y and z refine it. f is concave in each
 * coordinate, so each line search is exact up to its bracket tolerance. The
 * z range is closed at 1; for x >= alpha the optimum sits on that boundary
 * and `z_at_boundary` is set.
 *
 * Throws numerical_error if the sweep has not settled within `max_evaluations`.
 */
inline VariationalResult rate_via_variational(const RateQuery& q, double tol = 1e-9, int max_evaluations = 10000)
{
    const auto& p = q.params;
    p.validate();
    if (!(q.x > 0.0) || !std::isfinite(q.x)) {
        throw std::invalid_argument("variational rate requires x > 0");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
    // For every z <= 1 the unconstrained y-maximizer is alpha lambda z / (lambda + mu) < alpha,
    // so the y-optimum never exceeds max(x, alpha).
    const double y_lo = q.x;
    const double y_hi = 2.0 * std::max(q.x, p.alpha);
    const double z_lo = 1e-9;
    const double z_hi = 1.0;

    VariationalResult result;
    int& evals = result.evaluations;
    auto f = [&](double y, double z) { return variational_f(y, z, p); };

    constexpr int grid_points = 24;
    double best_y = y_lo;
    double best_z = z_hi;
    double best = f(best_y, best_z);
    ++evals;
    for (int i = 0; i < grid_points; ++i) {
        const double y = y_lo * std::pow(y_hi / y_lo, static_cast<double>(i) / (grid_points - 1));
        for (int j = 0; j < grid_points; ++j) {
            const double z = z_lo * std::pow(z_hi / z_lo, static_cast<double>(j) / (grid_points - 1));
            const double v = f(y, z);
            ++evals;
            if (v > best) {
                best = v;
                best_y = y;
                best_z = z;
            }
        }
    }

    const double line_tol = std::min(tol, 1e-6) * 1e-3;
    bool settled = false;
    while (evals < max_evaluations) {
        const double y_prev = best_y;
        const double z_prev = best_z;
        best_y = detail::golden_max([&](double y) { return f(y, best_z); }, y_lo, y_hi, line_tol, evals);
        best_z = detail::golden_max([&](double z) { return f(best_y, z); }, z_lo, z_hi, line_tol, evals);
        const double value = f(best_y, best_z);
        ++evals;
        const bool moved = std::abs(best_y - y_prev) > line_tol || std::abs(best_z - z_prev) > line_tol;
        best = value;
        if (!moved) {
            settled = true;
            break;
        }
    }
    if (!settled) {
        throw numerical_error("variational optimizer did not converge within the evaluation budget");
    }
    result.argmax = {best_y, best_z, best};
    result.rate = -best;
    result.z_at_boundary = best_z == z_hi;
    return result;
}

// Parameters of the tail bounds; [cT] and [delta T] are integer parts.
struct BoundQuery
{
    double count_fraction = 0.0;    // c
    double window_start = 0.0;      // Delta
    double horizon = 1.0;           // T
    double support_fraction = 1.0;  // delta
    double level = 0.0;             // a

    std::int64_t count() const { return static_cast<std::int64_t>(std::floor(count_fraction * horizon)); }
    std::int64_t support() const { return static_cast<std::int64_t>(std::floor(support_fraction * horizon)); }
};

/**
 * Chernoff bound on the catastrophe-stream lower tail
 *   P(nu2(T) - nu2(Delta T) <= cT)
 *     <= exp{-rho (1-Delta) T + rho (1-Delta) c T - T c ln c},  rho = alpha mu / (lambda + mu),
 * with c ln c = 0 at c = 0.
 */
inline double nu2_lower_tail_bound(const BoundQuery& b, const ModelParams& p)
{
    p.validate();
    if (!(b.count_fraction >= 0.0 && b.count_fraction < 1.0)) {
        throw std::invalid_argument("c must lie in [0, 1)");
    }
    if (!(b.window_start >= 0.0 && b.window_start <= 1.0)) {
        throw std::invalid_argument("Delta must lie in [0, 1]");
    }
    const double c = b.count_fraction;
    const double intensity = p.catastrophe_rate() * (1.0 - b.window_start);
    const double c_log_c = c == 0.0 ? 0.0 : c * std::log(c);
    return std::exp(-intensity * b.horizon + intensity * c * b.horizon - b.horizon * c_log_c);
}

// (1 / support)^terms * exp(total_level): bound on P(sum of `terms` uniforms on {1..support} <= total_level).
inline double uniform_sum_bound(std::int64_t terms, std::int64_t support, double total_level)
{
    if (support < 1) {
        throw std::invalid_argument("uniform support size must be at least 1");
    }
    if (terms < 0) {
        throw std::invalid_argument("number of terms must be nonnegative");
    }
    return std::exp(total_level - static_cast<double>(terms) * std::log(static_cast<double>(support)));
}

inline double uniform_sum_bound(const BoundQuery& b)
{
    return uniform_sum_bound(b.count(), b.support(), b.level * b.horizon);
}

} // namespace catastrophe
#endif // CATASTROPHE_RATE_HPP
