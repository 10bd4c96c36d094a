#ifndef CATASTROPHE_EXACT_HPP
#define CATASTROPHE_EXACT_HPP

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace catastrophe
{

/**
 * Embedded chain truncated to states {0, ..., M}. Row-major (M+1) x (M+1)
 * transition block plus, per row, the mass sent to an absorbing overflow
 * state. Only row M has overflow: its birth mass leaves the truncation.
 */
struct TransitionMatrix
{
    std::size_t cap = 0;  // M
    std::vector<double> entries;
    std::vector<double> overflow;

    std::size_t size() const { return cap + 1; }
    double operator()(std::size_t from, std::size_t to) const { return entries[from * size() + to]; }
};

inline TransitionMatrix chain_matrix(const ModelParams& params, std::size_t cap)
{
    params.validate();
    if (cap < 1) {
        throw std::invalid_argument("state cap M must be at least 1");
    }
    TransitionMatrix m;
    m.cap = cap;
    m.entries.assign(m.size() * m.size(), 0.0);
    m.overflow.assign(m.size(), 0.0);
    for (std::size_t i = 0; i <= cap; ++i) {
        const auto row = chain_step_probabilities(static_cast<std::int64_t>(i), params);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j <= cap) {
                m.entries[i * m.size() + j] = row[j];
            } else {
                m.overflow[i] += row[j];
            }
        }
    }
    return m;
}

// Truncated law on {0, ..., M}; `truncation_error` bounds the mass not represented.
struct Pmf
{
    std::vector<double> masses;
    double truncation_error = 0.0;

    double total() const
    {
        double s = truncation_error;
        for (double v : masses) {
            s += v;
        }
        return s;
    }
};

namespace detail
{

// Poisson(rate) masses for k = 0..K, built from the mode outward in log space, and the mass beyond K.
struct PoissonWeights
{
    std::vector<double> masses;
    double tail = 0.0;
};

inline double poisson_log_mass(double rate, std::int64_t k)
{
    if (rate == 0.0) {
        return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(k) * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0);
}

inline PoissonWeights poisson_weights(double rate, std::size_t max_count)
{
    PoissonWeights w;
    w.masses.resize(max_count + 1);
    for (std::size_t k = 0; k <= max_count; ++k) {
        w.masses[k] = std::exp(poisson_log_mass(rate, static_cast<std::int64_t>(k)));
    }
    // Tail summed term by term; beyond the mode the terms decay at least geometrically.
    double tail = 0.0;
    for (std::size_t k = max_count + 1;; ++k) {
        const double term = std::exp(poisson_log_mass(rate, static_cast<std::int64_t>(k)));
        tail += term;
        if (static_cast<double>(k) > rate && (term == 0.0 || term < tail * 1e-17)) {
            break;
        }
    }
    w.tail = tail;
    return w;
}

} // namespace detail

/**
 * Exact law of xi(T) up to truncation:
 *   sum_{k=0}^{K} Poisson(alpha T; k) * (delta_0 P^k),
 * with P the chain truncated at M. The Poisson mass beyond K and the mass
 * absorbed into overflow go to `truncation_error`. Throws numerical_error if
 * that exceeds `error_budget`.
 */
inline Pmf exact_xi_distribution(
    const ModelParams& params, double horizon, std::size_t cap, std::size_t max_events, double error_budget = 1e-12)
{
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("horizon must be nonnegative");
    }
    const auto matrix = chain_matrix(params, cap);
    const auto weights = detail::poisson_weights(params.alpha * horizon, max_events);
    const std::size_t n = matrix.size();

    std::vector<double> current(n, 0.0);
    std::vector<double> next(n, 0.0);
    current[0] = 1.0;
    double overflowed = 0.0;

    Pmf pmf;
    pmf.masses.assign(n, 0.0);
    double lost = 0.0;
    for (std::size_t k = 0; k <= max_events; ++k) {
        const double w = weights.masses[k];
        for (std::size_t s = 0; s < n; ++s) {
            pmf.masses[s] += w * current[s];
        }
        lost += w * overflowed;
        if (k == max_events) {
            break;
        }
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double mass = current[i];
            if (mass == 0.0) {
                continue;
            }
            const double* row = &matrix.entries[i * n];
            for (std::size_t j = 0; j < n; ++j) {
                next[j] += mass * row[j];
            }
            overflowed += mass * matrix.overflow[i];
        }
        current.swap(next);
    }
    pmf.truncation_error = lost + weights.tail;
    if (pmf.truncation_error > error_budget) {
        char message[128];
        std::snprintf(message, sizeof message, "truncation error %.3g exceeds budget %.3g (raise M or K)",
            pmf.truncation_error, error_budget);
        throw numerical_error(message);
    }
    return pmf;
}

// P(xi(T) >= xT); the true value lies in [value, value + uncertainty].
struct TailProbability
{
    double value = 0.0;
    double uncertainty = 0.0;
};

inline TailProbability tail_from_pmf(const Pmf& pmf, double horizon, double x)
{
    const auto threshold = tail_threshold(x, horizon);
    TailProbability tail{0.0, pmf.truncation_error};
    if (threshold <= 0) {
        return {1.0, 0.0};
    }
    for (std::size_t s = 0; s < pmf.masses.size(); ++s) {
        if (static_cast<std::int64_t>(s) >= threshold) {
            tail.value += pmf.masses[s];
        }
    }
    return tail;
}

inline TailProbability exact_tail(const ModelParams& params, double horizon, double x, std::size_t cap,
    std::size_t max_events, double error_budget = 1e-12)
{
    return tail_from_pmf(exact_xi_distribution(params, horizon, cap, max_events, error_budget), horizon, x);
}

/**
 * P(U_1 + ... + U_n <= a) for U_l i.i.d. uniform on {1, ..., m}, by exact
 * convolution over the support {n, ..., nm}.
 */
inline double uniform_sum_tail_exact(std::int64_t m, std::int64_t n, double a)
{
    if (m < 1) {
        throw std::invalid_argument("uniform support size must be at least 1");
    }
    if (n < 0) {
        throw std::invalid_argument("number of terms must be nonnegative");
    }
    if (a < static_cast<double>(n)) {
        return 0.0;
    }
    if (a >= static_cast<double>(n * m)) {
        return 1.0;
    }
    const auto top = static_cast<std::size_t>(n * m);
    std::vector<double> dist(top + 1, 0.0);
    std::vector<double> next(top + 1, 0.0);
    dist[0] = 1.0;
    const double p = 1.0 / static_cast<double>(m);
    for (std::int64_t l = 0; l < n; ++l) {
        std::fill(next.begin(), next.end(), 0.0);
        const auto reach = static_cast<std::size_t>(l * m);
        for (std::size_t s = static_cast<std::size_t>(l); s <= reach; ++s) {
            if (dist[s] == 0.0) {
                continue;
            }
            for (std::int64_t r = 1; r <= m; ++r) {
                next[s + static_cast<std::size_t>(r)] += dist[s] * p;
            }
        }
        dist.swap(next);
    }
    const auto limit = static_cast<std::size_t>(std::floor(a));
    double total = 0.0;
    for (std::size_t s = static_cast<std::size_t>(n); s <= limit; ++s) {
        total += dist[s];
    }
    return std::min(total, 1.0);
}

// P(N <= k) for N ~ Poisson(rate); terms built by the recursion t_j = t_{j-1} rate / j.
inline double poisson_lower_tail_exact(double rate, std::int64_t k)
{
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::invalid_argument("Poisson rate must be positive");
    }
    if (k < 0) {
        return 0.0;
    }
    // Start in log space so e^{-rate} cannot underflow for large rates.
    double log_term = -rate;
    double log_scale = log_term;
    double scaled_sum = 1.0;
    for (std::int64_t j = 1; j <= k; ++j) {
        log_term += std::log(rate / static_cast<double>(j));
        if (log_term > log_scale) {
            scaled_sum *= std::exp(log_scale - log_term);
            log_scale = log_term;
        }
        scaled_sum += std::exp(log_term - log_scale);
    }
    return std::min(1.0, scaled_sum * std::exp(log_scale));
}

} // namespace catastrophe
#endif // CATASTROPHE_EXACT_HPP
