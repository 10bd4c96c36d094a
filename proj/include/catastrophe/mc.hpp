#ifndef CATASTROPHE_MC_HPP
#define CATASTROPHE_MC_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "model.hpp"
#include "random.hpp"

namespace catastrophe
{

/**
 * Importance-sampling measure change: from scaled time `switch_time` on, the
 * birth and catastrophe intensities are multiplied by theta1 and theta2.
 * Both multipliers must be strictly positive so the likelihood ratio stays
 * finite.
 */
struct TiltConfig
{
    double switch_time = 0.0;
    double theta1 = 1.0;
    double theta2 = 1.0;

    void validate() const
    {
        if (!(switch_time >= 0.0 && switch_time < 1.0)) {
            throw std::invalid_argument("tilt switch time must lie in [0, 1)");
        }
        if (!(theta1 > 0.0 && std::isfinite(theta1) && theta2 > 0.0 && std::isfinite(theta2))) {
            throw std::invalid_argument("tilt multipliers must be positive and finite");
        }
    }

    bool is_identity() const { return theta1 == 1.0 && theta2 == 1.0; }

    IntensityProfile profile() const { return {switch_time, theta1, theta2}; }

    friend bool operator==(const TiltConfig&, const TiltConfig&) = default;
};

inline constexpr double default_catastrophe_tilt = 0.05;

/**
 * Tilt that makes the optimal path typical: births run at the optimal climb
 * slope (alpha when x < alpha, x otherwise) from the breakpoint on, and
 * catastrophes are suppressed to `theta2` times their rate over the climb.
 * For x <= 0 the event is certain and the identity tilt is returned.
 */
inline TiltConfig default_tilt(double x, const ModelParams& params, double theta2 = default_catastrophe_tilt)
{
    if (x <= 0.0) {
        params.validate();
        return TiltConfig{0.0, 1.0, 1.0};
    }
    const auto path = optimal_path(x, params);
    const double total = params.lambda + params.mu;
    TiltConfig tilt;
    tilt.switch_time = path.breakpoint;
    tilt.theta1 = x < params.alpha ? total / params.lambda : x * total / (params.alpha * params.lambda);
    tilt.theta2 = theta2;
    tilt.validate();
    return tilt;
}

// ln dP/dQ for a path drawn under the tilted measure Q.
inline double log_likelihood_ratio(const PathSample& path, const TiltConfig& tilt, const ModelParams& params, double horizon)
{
    const double switch_at = tilt.switch_time * horizon;
    const double tilted_length = horizon - switch_at;
    std::int64_t births = 0;
    std::int64_t catastrophes = 0;
    for (const auto& e : path.events) {
        if (e.time < switch_at) {
            continue;
        }
        (e.kind == EventKind::Birth ? births : catastrophes) += 1;
    }
    double log_weight = (tilt.theta1 - 1.0) * params.birth_rate() * tilted_length
        + (tilt.theta2 - 1.0) * params.catastrophe_rate() * tilted_length;
    if (tilt.theta1 != 1.0) {
        log_weight -= static_cast<double>(births) * std::log(tilt.theta1);
    }
    if (tilt.theta2 != 1.0) {
        log_weight -= static_cast<double>(catastrophes) * std::log(tilt.theta2);
    }
    return log_weight;
}

/**
 * Likelihood ratio of the untilted process against the tilted one. Only the
 * Poisson intensities change, so the catastrophe landing draws cancel:
 *   exp{(theta1-1) r1 L} theta1^{-N1} exp{(theta2-1) r2 L} theta2^{-N2}
 * with L = (1-s)T and N1, N2 the birth / catastrophe counts from sT on.
 */
inline double likelihood_ratio(const PathSample& path, const TiltConfig& tilt, const ModelParams& params, double horizon)
{
    return std::exp(log_likelihood_ratio(path, tilt, params, horizon));
}

struct EstimateResult
{
    std::string method;
    double p_hat = 0.0;
    std::optional<double> log_rate;  // -ln(p_hat) / T, empty when p_hat == 0
    double std_err = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t n = 0;
    std::uint64_t hits = 0;
    double ess = 0.0;
    std::uint64_t seed = 0;
    bool low_ess = false;  // ess < 0.01 n: the proposal misses the target event

    friend bool operator==(const EstimateResult&, const EstimateResult&) = default;
};

/**
 * Runs `task(i)` for i in [0, n) on `workers` threads and returns the results
 * in index order. Each result depends only on its index, so the output is the
 * same for every worker count.
 */
template <typename Task>
auto run_replicas(std::uint64_t n, unsigned workers, Task&& task)
{
    using Result = decltype(task(std::uint64_t{0}));
    std::vector<Result> results(n);
    workers = std::max(1u, workers);
    if (workers == 1 || n < 2) {
        for (std::uint64_t i = 0; i < n; ++i) {
            results[i] = task(i);
        }
        return results;
    }
    constexpr std::uint64_t chunk = 256;
    std::atomic<std::uint64_t> cursor{0};
    auto work = [&] {
        for (;;) {
            const std::uint64_t begin = cursor.fetch_add(chunk);
            if (begin >= n) {
                return;
            }
            const std::uint64_t end = std::min(n, begin + chunk);
            for (std::uint64_t i = begin; i < end; ++i) {
                results[i] = task(i);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back(work);
    }
    pool.clear();
    return results;
}

namespace detail
{

inline constexpr double z95 = 1.959963984540054;

// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t n)
{
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z95 * z95;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

inline std::optional<double> log_rate_of(double p_hat, double horizon)
{
    if (p_hat > 0.0) {
        return -std::log(p_hat) / horizon;
    }
    return std::nullopt;
}

struct WeightedHit
{
    double weight = 0.0;
    bool hit = false;
};

inline void require_positive_count(std::uint64_t n)
{
    if (n < 1) {
        throw std::invalid_argument("replica count n must be at least 1");
    }
}

} // namespace detail

/**
 * Fraction of replicas with terminal value >= x. Replica i is
 * simulate_decomposed under seed `seed`, index i (the same paths the IS
 * estimator draws under the identity tilt). Wilson score interval.
 */
inline EstimateResult estimate_tail_naive(
    const ModelParams& params, double horizon, double x, std::uint64_t n, std::uint64_t seed, unsigned workers = 1)
{
    params.validate();
    detail::require_positive_count(n);
    const auto threshold = tail_threshold(x, horizon);
    const auto hits_per_replica = run_replicas(n, workers, [&](std::uint64_t i) -> std::uint8_t {
        const auto path = simulate_decomposed(params, {horizon, seed, i});
        return path.terminal_state() >= threshold ? 1 : 0;
    });
    std::uint64_t hits = 0;
    for (auto h : hits_per_replica) {
        hits += h;
    }
    EstimateResult r;
    r.method = "naive";
    r.n = n;
    r.hits = hits;
    r.seed = seed;
    r.p_hat = static_cast<double>(hits) / static_cast<double>(n);
    r.log_rate = detail::log_rate_of(r.p_hat, horizon);
    r.std_err = std::sqrt(r.p_hat * (1.0 - r.p_hat) / static_cast<double>(n));
    std::tie(r.ci_low, r.ci_high) = detail::wilson_interval(hits, n);
    r.ess = static_cast<double>(n);
    return r;
}

/**
 * Importance-sampling estimate of P(xi_T(1) >= x): paths are drawn from
 * simulate_decomposed under the tilted intensities and each hit contributes
 * its likelihood ratio. ess = (sum w)^2 / sum w^2 over all replicas. The
 * variance of the mean is the sample variance of weight * indicator divided
 * by ess rather than n, which widens the interval when a few heavy weights
 * dominate; under the identity tilt ess = n and this is the usual standard
 * error. The 95% interval is normal.
 */
inline EstimateResult estimate_tail_is(const ModelParams& params, double horizon, double x, const TiltConfig& tilt,
    std::uint64_t n, std::uint64_t seed, unsigned workers = 1)
{
    params.validate();
    tilt.validate();
    detail::require_positive_count(n);
    const auto profile = tilt.profile();
    const auto threshold = tail_threshold(x, horizon);
    const auto samples = run_replicas(n, workers, [&](std::uint64_t i) {
        const auto path = simulate_decomposed(params, {horizon, seed, i}, profile);
        return detail::WeightedHit{
            likelihood_ratio(path, tilt, params, horizon), path.terminal_state() >= threshold};
    });

    double sum_w = 0.0;
    double sum_w2 = 0.0;
    double sum_v = 0.0;
    std::uint64_t hits = 0;
    for (const auto& s : samples) {
        sum_w += s.weight;
        sum_w2 += s.weight * s.weight;
        if (s.hit) {
            sum_v += s.weight;
            ++hits;
        }
    }
    const double nn = static_cast<double>(n);
    EstimateResult r;
    r.method = "is";
    r.n = n;
    r.hits = hits;
    r.seed = seed;
    r.p_hat = sum_v / nn;
    double squares = 0.0;
    for (const auto& s : samples) {
        const double d = (s.hit ? s.weight : 0.0) - r.p_hat;
        squares += d * d;
    }
    r.ess = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
    if (n > 1 && r.ess > 0.0) {
        r.std_err = std::sqrt(squares / (nn - 1.0) / r.ess);
    }
    r.ci_low = std::max(0.0, r.p_hat - detail::z95 * r.std_err);
    r.ci_high = r.p_hat + detail::z95 * r.std_err;
    r.log_rate = detail::log_rate_of(r.p_hat, horizon);
    r.low_ess = r.ess < 0.01 * nn;
    return r;
}

// Fraction of replicas whose running maximum exceeds eps on the scaled clock.
inline EstimateResult lln_sup_fraction(
    const ModelParams& params, double horizon, double eps, std::uint64_t n, std::uint64_t seed, unsigned workers = 1)
{
    params.validate();
    detail::require_positive_count(n);
    if (!(eps > 0.0)) {
        throw std::invalid_argument("eps must be positive");
    }
    const auto exceed = run_replicas(n, workers, [&](std::uint64_t i) -> std::uint8_t {
        return sup_value(simulate_subordinated(params, {horizon, seed, i}), horizon) > eps ? 1 : 0;
    });
    std::uint64_t hits = 0;
    for (auto h : exceed) {
        hits += h;
    }
    EstimateResult r;
    r.method = "naive";
    r.n = n;
    r.hits = hits;
    r.seed = seed;
    r.p_hat = static_cast<double>(hits) / static_cast<double>(n);
    r.log_rate = detail::log_rate_of(r.p_hat, horizon);
    r.std_err = std::sqrt(r.p_hat * (1.0 - r.p_hat) / static_cast<double>(n));
    std::tie(r.ci_low, r.ci_high) = detail::wilson_interval(hits, n);
    r.ess = static_cast<double>(n);
    return r;
}

enum class EstimatorMethod
{
    Naive,
    ImportanceSampling
};

struct SweepPoint
{
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::optional<EstimateResult> estimate;
    std::string error;
};

/**
 * Runs one estimate per horizon in `horizons`. Each horizon gets its own seed
 * derived from (seed, T), so results do not depend on list order. A failure
 * at one horizon is recorded in its point and the sweep continues.
 * For IS, `tilt` overrides default_tilt(x) when given.
 */
inline std::vector<SweepPoint> rate_curve_sweep(const ModelParams& params, double x, const std::vector<double>& horizons,
    EstimatorMethod method, std::uint64_t n, std::uint64_t seed, const std::optional<TiltConfig>& tilt = std::nullopt,
    unsigned workers = 1)
{
    std::vector<SweepPoint> out;
    out.reserve(horizons.size());
    for (double horizon : horizons) {
        SweepPoint point;
        point.horizon = horizon;
        point.seed = seed_for_key(seed, horizon);
        try {
            if (method == EstimatorMethod::Naive) {
                point.estimate = estimate_tail_naive(params, horizon, x, n, point.seed, workers);
            } else {
                const auto t = tilt ? *tilt : default_tilt(x, params);
                point.estimate = estimate_tail_is(params, horizon, x, t, n, point.seed, workers);
            }
        } catch (const std::exception& e) {
            point.error = e.what();
        }
        out.push_back(std::move(point));
    }
    return out;
}

} // namespace catastrophe
#endif // CATASTROPHE_MC_HPP
