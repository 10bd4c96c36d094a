#ifndef CATASTROPHE_MODEL_HPP
#define CATASTROPHE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "random.hpp"

namespace catastrophe
{

/**
 * Parameters of the linear-growth / uniform-catastrophe population process.
 *
 * At each tick of a Poisson clock of rate `alpha` the population grows by one
 * with weight `lambda` or suffers a catastrophe with weight `mu`. A
 * catastrophe from state i lands uniformly on {0, ..., i-1}. State 0 always
 * moves to 1.
 */
struct ModelParams
{
    double lambda = 1.0;
    double mu = 1.0;
    double alpha = 1.0;

    void validate() const
    {
        auto check = [](double v, const char* name) {
            if (!(std::isfinite(v) && v > 0.0)) {
                throw std::invalid_argument(std::string(name) + " must be positive and finite");
            }
        };
        check(lambda, "lambda");
        check(mu, "mu");
        check(alpha, "alpha");
    }

    double birth_probability() const { return lambda / (lambda + mu); }
    double catastrophe_probability() const { return mu / (lambda + mu); }

    // Intensities of the independent birth and catastrophe streams.
    double birth_rate() const { return alpha * lambda / (lambda + mu); }
    double catastrophe_rate() const { return alpha * mu / (lambda + mu); }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct SimSpec
{
    double horizon = 1.0;
    std::uint64_t seed = 0;
    std::uint64_t replica_index = 0;

    void validate() const
    {
        if (!(std::isfinite(horizon) && horizon > 0.0)) {
            throw std::invalid_argument("horizon must be positive and finite");
        }
    }
};

enum class EventKind : std::uint8_t
{
    Birth,
    Catastrophe
};

inline const char* to_string(EventKind kind)
{
    return kind == EventKind::Birth ? "birth" : "catastrophe";
}

struct Event
{
    double time = 0.0;
    EventKind kind = EventKind::Birth;
    std::int64_t post_state = 0;

    friend bool operator==(const Event&, const Event&) = default;
};

// Change points of one trajectory on (0, T]; the process starts at 0.
struct PathSample
{
    std::vector<Event> events;

    static constexpr std::int64_t initial_state = 0;

    std::int64_t terminal_state() const
    {
        return events.empty() ? initial_state : events.back().post_state;
    }

    std::int64_t max_state() const
    {
        std::int64_t best = initial_state;
        for (const auto& e : events) {
            best = std::max(best, e.post_state);
        }
        return best;
    }

    friend bool operator==(const PathSample&, const PathSample&) = default;
};

// The path t -> state(T t) / T sampled on the grid t_j = j / m.
struct ScaledPath
{
    std::vector<double> grid;
    std::vector<double> values;
};

struct StepOutcome
{
    std::int64_t state = 0;
    EventKind kind = EventKind::Birth;
};

/**
 * Transition probabilities out of `state`, indexed by target state.
 * The vector has length state + 2; entry state + 1 is the birth mass.
 */
inline std::vector<double> chain_step_probabilities(std::int64_t state, const ModelParams& params)
{
    if (state < 0) {
        throw std::invalid_argument("state must be nonnegative");
    }
    std::vector<double> p(static_cast<std::size_t>(state) + 2, 0.0);
    if (state == 0) {
        p[1] = 1.0;
        return p;
    }
    const double landing = params.catastrophe_probability() / static_cast<double>(state);
    std::fill(p.begin(), p.end() - 2, landing);
    p[static_cast<std::size_t>(state) + 1] = params.birth_probability();
    return p;
}

/**
 * One step of the embedded chain. The branch is drawn first (birth with
 * probability lambda / (lambda + mu)); a catastrophe from i >= 1 then draws an
 * exact integer-uniform landing state in {0, ..., i-1}. From state 0 both
 * branches lead to 1, and the kind records the branch taken.
 */
inline StepOutcome chain_step(std::int64_t state, const ModelParams& params, Stream& rng)
{
    const bool birth = rng.uniform() < params.birth_probability();
    if (state == 0) {
        return {1, birth ? EventKind::Birth : EventKind::Catastrophe};
    }
    if (birth) {
        return {state + 1, EventKind::Birth};
    }
    const auto landing = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(state)));
    return {landing, EventKind::Catastrophe};
}

/**
 * Simulates the process as a chain run at the ticks of a rate-alpha Poisson
 * clock. Inter-event gaps are drawn as exponentials; each tick consumes one
 * branch draw and, for catastrophes from a positive state, one landing draw.
 */
inline PathSample simulate_subordinated(const ModelParams& params, const SimSpec& spec)
{
    params.validate();
    spec.validate();
    Stream rng(spec.seed, spec.replica_index);
    PathSample path;
    std::int64_t state = 0;
    double t = 0.0;
    for (;;) {
        t += rng.exponential() / params.alpha;
        if (t > spec.horizon) {
            break;
        }
        const auto step = chain_step(state, params, rng);
        state = step.state;
        path.events.push_back({t, step.kind, state});
    }
    return path;
}

/**
 * Piecewise-constant multipliers on the two Poisson intensities: identity on
 * [0, sT), (birth_multiplier, catastrophe_multiplier) on [sT, T].
 */
struct IntensityProfile
{
    double switch_time = 0.0;
    double birth_multiplier = 1.0;
    double catastrophe_multiplier = 1.0;
};

namespace detail
{

/**
 * Next arrival of a stream with base rate `rate` whose intensity is multiplied
 * by `multiplier` from time `switch_at` on, given unit-exponential `budget`
 * of integrated hazard measured from time `now`.
 */
inline double next_arrival(double now, double budget, double rate, double multiplier, double switch_at)
{
    if (multiplier == 1.0 || now >= switch_at) {
        const double effective = now >= switch_at ? rate * multiplier : rate;
        return now + budget / effective;
    }
    const double before_switch = rate * (switch_at - now);
    if (budget <= before_switch) {
        return now + budget / rate;
    }
    return switch_at + (budget - before_switch) / (rate * multiplier);
}

} // namespace detail

/**
 * Simulates the process as two independent Poisson streams: births at rate
 * alpha lambda / (lambda + mu) and catastrophes at rate alpha mu / (lambda + mu).
 * A catastrophe at state m >= 1 subtracts an integer-uniform draw on {1, ..., m};
 * at state 0 it adds one.
 *
 * Each stream keeps its own pending arrival time, obtained by inverting its
 * integrated hazard against a fresh unit exponential. Draws come from the
 * replica's single stream in event order: the two initial arrivals (birth
 * first), then for every event its landing draw (if any) followed by the
 * replacement arrival of the stream that fired. With identity multipliers the
 * path does not depend on the profile's switch time.
 */
inline PathSample simulate_decomposed(
    const ModelParams& params, const SimSpec& spec, const IntensityProfile& profile = {})
{
    params.validate();
    spec.validate();
    if (!(profile.birth_multiplier > 0.0 && profile.catastrophe_multiplier > 0.0)) {
        throw std::invalid_argument("intensity multipliers must be positive");
    }
    Stream rng(spec.seed, spec.replica_index);
    const double switch_at = profile.switch_time * spec.horizon;
    const double birth_rate = params.birth_rate();
    const double catastrophe_rate = params.catastrophe_rate();

    double next_birth =
        detail::next_arrival(0.0, rng.exponential(), birth_rate, profile.birth_multiplier, switch_at);
    double next_catastrophe = detail::next_arrival(
        0.0, rng.exponential(), catastrophe_rate, profile.catastrophe_multiplier, switch_at);

    PathSample path;
    std::int64_t state = 0;
    for (;;) {
        const bool birth = next_birth <= next_catastrophe;
        const double t = birth ? next_birth : next_catastrophe;
        if (t > spec.horizon) {
            break;
        }
        if (birth) {
            state += 1;
            path.events.push_back({t, EventKind::Birth, state});
            next_birth = detail::next_arrival(
                t, rng.exponential(), birth_rate, profile.birth_multiplier, switch_at);
        } else {
            if (state == 0) {
                state = 1;
            } else {
                state -= 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(state)));
            }
            path.events.push_back({t, EventKind::Catastrophe, state});
            next_catastrophe = detail::next_arrival(
                t, rng.exponential(), catastrophe_rate, profile.catastrophe_multiplier, switch_at);
        }
    }
    return path;
}

// Right-continuous sampling of state(T t) / T on m + 1 equally spaced points of [0, 1].
inline ScaledPath scale_path(const PathSample& path, double horizon, std::size_t grid_size)
{
    if (grid_size < 1) {
        throw std::invalid_argument("grid size must be at least 1");
    }
    ScaledPath out;
    out.grid.resize(grid_size + 1);
    out.values.resize(grid_size + 1);
    std::size_t next = 0;
    std::int64_t state = PathSample::initial_state;
    for (std::size_t j = 0; j <= grid_size; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(grid_size);
        const double cutoff = horizon * static_cast<double>(j) / static_cast<double>(grid_size);
        while (next < path.events.size() && path.events[next].time <= cutoff) {
            state = path.events[next].post_state;
            ++next;
        }
        out.grid[j] = t;
        out.values[j] = static_cast<double>(state) / horizon;
    }
    return out;
}

inline double terminal_value(const PathSample& path, double horizon)
{
    return static_cast<double>(path.terminal_state()) / horizon;
}

// Smallest state n with n / T >= x, i.e. ceil(xT); the event {xi_T(1) >= x} is {state >= this}.
inline std::int64_t tail_threshold(double x, double horizon)
{
    return static_cast<std::int64_t>(std::ceil(x * horizon));
}

inline double sup_value(const PathSample& path, double horizon)
{
    return static_cast<double>(path.max_state()) / horizon;
}

/**
 * Most likely way for the scaled process to end at x: stay near zero until
 * `breakpoint`, then climb linearly to x. For x < alpha the climb has slope
 * alpha and starts at 1 - x / alpha; for x >= alpha it is the straight line
 * of slope x from the origin.
 */
struct OptimalPath
{
    double breakpoint = 0.0;
    double slope = 0.0;
    double terminal = 0.0;

    double operator()(double t) const
    {
        return t <= breakpoint ? 0.0 : std::max(0.0, terminal - slope * (1.0 - t));
    }
};

inline OptimalPath optimal_path(double x, const ModelParams& params)
{
    params.validate();
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("optimal path requires x > 0");
    }
    if (x < params.alpha) {
        return {1.0 - x / params.alpha, params.alpha, x};
    }
    return {0.0, x, x};
}

} // namespace catastrophe
#endif // CATASTROPHE_MODEL_HPP
