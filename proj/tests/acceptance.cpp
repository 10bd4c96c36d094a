// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "catastrophe/exact.hpp"
#include "catastrophe/mc.hpp"
#include "catastrophe/model.hpp"
#include "catastrophe/path_analysis.hpp"
#include "catastrophe/rate.hpp"
#include "cli.hpp"

using namespace catastrophe;

namespace
{

const ModelParams unit{1.0, 1.0, 1.0};
const std::vector<ModelParams> triples = {{1.0, 1.0, 1.0}, {2.0, 3.0, 1.5}, {0.3, 0.7, 4.0}};
constexpr std::uint64_t master_seed = 20261018;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string format(const char* fmt, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(a[i] - b[i]);
    }
    return 0.5 * s;
}

Outcome variational_identity()
{
    double worst = 0.0;
    for (const auto& p : triples) {
        for (int i = 1; i <= 50; ++i) {
            const double x = 3.0 * p.alpha * i / 50.0;
            const RateQuery q{x, p};
            worst = std::max(worst, std::abs(rate_via_variational(q).rate - rate_I(q).value()));
        }
    }
    return {worst <= 1e-6, format("max |variational - closed form| = %.3e over 150 points (tol 1e-6)", worst)};
}

Outcome rate_regularity()
{
    double gap = 0.0;
    int violations = 0;
    bool zero_exact = true;
    for (const auto& p : triples) {
        const double first_branch = p.alpha * std::log((p.lambda + p.mu) / p.lambda);
        gap = std::max(gap, std::abs(rate_I({p.alpha, p}).value() - first_branch));
        zero_exact = zero_exact && rate_I({0.0, p}).value() == 0.0;
        const int points = 1000;
        const double h = 3.0 * p.alpha / (points - 1);
        std::vector<double> v(points);
        for (int i = 0; i < points; ++i) {
            v[i] = rate_I({i * h, p}).value();
        }
        const double noise = 64 * std::numeric_limits<double>::epsilon() * v.back();
        for (int i = 1; i < points; ++i) {
            violations += v[i] - v[i - 1] < -noise;
            if (i + 1 < points) {
                violations += v[i + 1] - 2 * v[i] + v[i - 1] < -noise;
            }
        }
    }
    return {gap <= 1e-12 && violations == 0 && zero_exact,
        format("gap at alpha = %.3e (tol 1e-12), convexity/monotonicity violations = %d, I(0) == 0: %s", gap,
            violations, zero_exact ? "yes" : "no")};
}

Outcome simulator_vs_oracle()
{
    const double horizon = 4.0;
    const std::size_t cap = 64;
    const auto exact = exact_xi_distribution(unit, horizon, cap, 60).masses;
    const std::uint64_t n = 1000000;
    auto law = [&](auto simulate) {
        std::vector<double> counts(cap + 1, 0.0);
        for (std::uint64_t i = 0; i < n; ++i) {
            const auto s = static_cast<std::size_t>(simulate(SimSpec{horizon, master_seed, i}).terminal_state());
            counts[std::min(s, cap)] += 1.0;
        }
        for (auto& c : counts) {
            c /= static_cast<double>(n);
        }
        return counts;
    };
    const auto sub = law([](const SimSpec& s) { return simulate_subordinated(unit, s); });
    const auto dec = law([](const SimSpec& s) { return simulate_decomposed(unit, s); });
    const double tv_sub = total_variation(sub, exact);
    const double tv_dec = total_variation(dec, exact);
    const double tv_pair = total_variation(sub, dec);
    return {tv_sub <= 0.01 && tv_dec <= 0.01 && tv_pair <= 0.01,
        format("TV(subordinated, exact) = %.4f, TV(decomposed, exact) = %.4f, TV(pair) = %.4f (tol 0.01)", tv_sub,
            tv_dec, tv_pair)};
}

Outcome bound_domination()
{
    int checks = 0;
    int violations = 0;
    for (const ModelParams& p : {ModelParams{1.0, 1.0, 1.0}, ModelParams{2.0, 3.0, 1.5}}) {
        for (double delta : {0.0, 0.5}) {
            for (double horizon : {10.0, 50.0}) {
                for (int k = 1; k <= 19; ++k) {
                    const BoundQuery q{0.05 * k, delta, horizon, 1.0, 0.0};
                    const double rate = p.catastrophe_rate() * (1.0 - delta) * horizon;
                    ++checks;
                    violations += poisson_lower_tail_exact(rate, q.count()) > nu2_lower_tail_bound(q, p);
                }
            }
        }
    }
    for (std::int64_t m : {5, 20}) {
        for (std::int64_t n : {3, 10}) {
            for (int k = 1; k <= 10; ++k) {
                const double level = 0.5 * static_cast<double>(m * n) * 0.2 * k;
                ++checks;
                violations += uniform_sum_tail_exact(m, n, level) > uniform_sum_bound(n, m, level);
            }
        }
    }
    return {violations == 0, format("%d violations over %d bound checks (Poisson Chernoff and uniform-sum grids)", violations, checks)};
}

Outcome legendre_consistency()
{
    const ModelParams p{2.0, 3.0, 1.5};
    double worst = 0.0;
    int pairs = 0;
    for (double delta : {0.0, 0.2, 0.5, 0.8}) {
        const double mean = p.alpha * p.lambda * (1.0 - delta) / (p.lambda + p.mu);
        for (double x : {0.1, 0.35, 0.8, 1.5, 3.0}) {
            auto negative = [&](double y) { return -(x * y - mean * std::expm1(y)); };
            const auto best = boost::math::tools::brent_find_minima(
                negative, -50.0, 50.0, std::numeric_limits<double>::digits / 2);
            worst = std::max(worst, std::abs(-best.second - rate_I1(x, delta, p).value()));
            ++pairs;
        }
    }
    return {worst <= 1e-8, format("max |numeric Legendre - I1| = %.3e over %d (x, Delta) pairs (tol 1e-8)", worst, pairs)};
}

Outcome lln_decay()
{
    std::vector<double> fractions;
    std::string detail = "fractions:";
    for (double horizon : {25.0, 50.0, 100.0, 200.0}) {
        const auto r = lln_sup_fraction(unit, horizon, 0.2, 10000, seed_for_key(master_seed, horizon));
        fractions.push_back(r.p_hat);
        detail += format(" T=%g:%.4f", horizon, r.p_hat);
    }
    bool nonincreasing = true;
    for (std::size_t i = 1; i < fractions.size(); ++i) {
        nonincreasing = nonincreasing && fractions[i] <= fractions[i - 1];
    }
    return {nonincreasing && fractions.back() < 0.01, detail + " (nonincreasing, last < 0.01)"};
}

Outcome rate_convergence()
{
    struct Case
    {
        double x;
        double lo;
        double hi;
    };
    bool pass = true;
    std::string detail;
    for (const Case& c : {Case{0.5, 0.24, 0.52}, Case{2.0, 1.33, 2.22}}) {
        const double target = rate_I({c.x, unit}).value();
        const auto points =
            rate_curve_sweep(unit, c.x, {40.0, 80.0, 160.0}, EstimatorMethod::ImportanceSampling, 100000, master_seed);
        std::vector<double> errors;
        detail += format("x=%g I=%.5f:", c.x, target);
        for (const auto& pt : points) {
            if (!pt.estimate || !pt.estimate->log_rate) {
                pass = false;
                detail += format(" T=%g:failed", pt.horizon);
                errors.push_back(std::numeric_limits<double>::infinity());
                continue;
            }
            const double lr = *pt.estimate->log_rate;
            errors.push_back(std::abs(lr - target));
            detail += format(" T=%g:%.4f", pt.horizon, lr);
        }
        for (std::size_t i = 1; i < errors.size(); ++i) {
            pass = pass && errors[i] < errors[i - 1];
        }
        if (points.back().estimate && points.back().estimate->log_rate) {
            const double last = *points.back().estimate->log_rate;
            pass = pass && last >= c.lo && last <= c.hi;
        }
        detail += format(" [band %.2f, %.2f]; ", c.lo, c.hi);
    }
    return {pass, detail + "|error| decreasing in T"};
}

Outcome optimal_path_recovery()
{
    const double x = 0.5;
    const auto optimal = optimal_path(x, unit);
    const auto tilt = default_tilt(x, unit);
    auto distance_at = [&](double horizon) {
        const auto samples =
            sample_conditioned_paths(unit, horizon, x, tilt, 100000, seed_for_key(master_seed, horizon), default_path_grid);
        return path_distance(conditioned_mean_path(samples, default_path_grid), optimal);
    };
    const double d40 = distance_at(40.0);
    const double d160 = distance_at(160.0);
    return {d160 <= 0.1 && d160 < d40,
        format("L-inf distance T=40: %.4f, T=160: %.4f (need T=160 <= 0.1 and below T=40); breakpoint %.2f slope %.2f",
            d40, d160, optimal.breakpoint, optimal.slope)};
}

Outcome unbiasedness_and_reproducibility()
{
    const double exact = exact_tail(unit, 4.0, 0.5, 64, 60).value;
    const auto tilt = default_tilt(0.5, unit);
    int covered = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
        const auto r = estimate_tail_is(unit, 4.0, 0.5, tilt, 10000, derive_seed(master_seed, run));
        covered += std::abs(r.p_hat - exact) <= 3.0 * r.std_err;
    }

    bool deterministic = true;
    const std::vector<std::vector<std::string>> commands = {
        {"simulate", "--T", "50", "--seed", "5"},
        {"simulate", "--T", "50", "--seed", "5", "--simulator", "decomposed", "--view", "scaled"},
        {"exact", "--T", "4"},
        {"rate", "--grid", "20"},
        {"estimate", "--T", "40", "--n", "5000", "--seed", "5"},
        {"estimate", "--T", "4", "--n", "5000", "--seed", "5", "--method", "naive"},
        {"lln", "--n", "2000", "--seed", "5"},
        {"sweep", "--n", "2000", "--seed", "5"},
        {"paths", "--T", "40", "--n", "5000", "--seed", "5"},
    };
    for (const auto& base : commands) {
        std::vector<std::string> outputs;
        for (const char* workers : {"1", "1", "4"}) {
            auto args = base;
            args.insert(args.end(), {"--workers", workers});
            std::ostringstream out;
            std::ostringstream err;
            deterministic = deterministic && cli::run(args, out, err) == 0;
            outputs.push_back(out.str());
        }
        deterministic = deterministic && outputs[0] == outputs[1] && outputs[0] == outputs[2];
    }
    return {covered >= 95 && deterministic,
        format("%d/100 IS runs within 3 SE of exact %.6f (need >= 95); CLI outputs byte-identical across runs and "
               "worker counts: %s",
            covered, exact, deterministic ? "yes" : "no")};
}

} // namespace

int main()
{
    struct Criterion
    {
        const char* name;
        std::function<Outcome()> check;
        double budget_seconds;  // 0: no runtime bound stated
    };
    const std::vector<Criterion> criteria = {
        {"AC1 variational identity", variational_identity, 5.0},
        {"AC2 rate-function regularity", rate_regularity, 0.0},
        {"AC3 simulators vs exact oracle", simulator_vs_oracle, 120.0},
        {"AC4 bound domination", bound_domination, 0.0},
        {"AC5 Legendre consistency", legendre_consistency, 0.0},
        {"AC6 LLN decay", lln_decay, 0.0},
        {"AC7 LDP rate convergence", rate_convergence, 600.0},
        {"AC8 optimal-path recovery", optimal_path_recovery, 0.0},
        {"AC9 unbiasedness and reproducibility", unbiasedness_and_reproducibility, 0.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool pass = outcome.pass;
        std::string timing = format("%.1fs", seconds);
        if (c.budget_seconds > 0.0) {
            timing += format(" (limit %.0fs)", c.budget_seconds);
            pass = pass && seconds < c.budget_seconds;
        }
        failures += !pass;
        std::printf("[%s] %s: %s [%s]\n", pass ? "PASS" : "FAIL", c.name, outcome.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
