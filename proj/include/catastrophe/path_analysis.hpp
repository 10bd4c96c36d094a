#ifndef CATASTROPHE_PATH_ANALYSIS_HPP
#define CATASTROPHE_PATH_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "mc.hpp"
#include "model.hpp"

namespace catastrophe
{

inline constexpr std::size_t default_path_grid = 100;

// One replica's contribution to a conditioned path average.
struct ConditionedSample
{
    ScaledPath path;
    double weight = 1.0;
    bool hit = false;
};

struct MeanPath
{
    std::vector<double> grid;
    std::vector<double> mean_values;
    double total_weight = 0.0;
};

/**
 * Weighted pointwise mean of the sample paths that satisfy the conditioning
 * event. With IS weights this estimates E[xi_T(t) | xi_T(1) >= x] under the
 * original law. Throws statistical_error if no sample qualifies.
 */
inline MeanPath conditioned_mean_path(std::span<const ConditionedSample> samples, std::size_t grid_size)
{
    MeanPath mean;
    mean.grid.resize(grid_size + 1);
    mean.mean_values.assign(grid_size + 1, 0.0);
    for (std::size_t j = 0; j <= grid_size; ++j) {
        mean.grid[j] = static_cast<double>(j) / static_cast<double>(grid_size);
    }
    for (const auto& s : samples) {
        if (!s.hit || !(s.weight > 0.0)) {
            continue;
        }
        if (s.path.values.size() != grid_size + 1) {
            throw std::invalid_argument("sample path grid does not match the requested grid size");
        }
        mean.total_weight += s.weight;
        for (std::size_t j = 0; j <= grid_size; ++j) {
            mean.mean_values[j] += s.weight * s.path.values[j];
        }
    }
    if (!(mean.total_weight > 0.0)) {
        throw statistical_error("no sample satisfies the conditioning event");
    }
    for (auto& v : mean.mean_values) {
        v /= mean.total_weight;
    }
    return mean;
}

// Max over the mean path's grid of |mean(t_j) - optimal(t_j)|.
inline double path_distance(const MeanPath& a, const OptimalPath& b)
{
    double worst = 0.0;
    for (std::size_t j = 0; j < a.grid.size(); ++j) {
        worst = std::max(worst, std::abs(a.mean_values[j] - b(a.grid[j])));
    }
    return worst;
}

/**
 * Draws n replicas under `tilt` and keeps the scaled paths of those ending at
 * or above x, each with its likelihood ratio. Same seeding as estimate_tail_is.
 */
inline std::vector<ConditionedSample> sample_conditioned_paths(const ModelParams& params, double horizon, double x,
    const TiltConfig& tilt, std::uint64_t n, std::uint64_t seed, std::size_t grid_size = default_path_grid,
    unsigned workers = 1)
{
    params.validate();
    tilt.validate();
    const auto profile = tilt.profile();
    const auto threshold = tail_threshold(x, horizon);
    auto all = run_replicas(n, workers, [&](std::uint64_t i) {
        const auto path = simulate_decomposed(params, {horizon, seed, i}, profile);
        ConditionedSample s;
        s.hit = path.terminal_state() >= threshold;
        if (s.hit) {
            s.weight = likelihood_ratio(path, tilt, params, horizon);
            s.path = scale_path(path, horizon, grid_size);
        }
        return s;
    });
    std::vector<ConditionedSample> hits;
    for (auto& s : all) {
        if (s.hit) {
            hits.push_back(std::move(s));
        }
    }
    return hits;
}

} // namespace catastrophe
#endif // CATASTROPHE_PATH_ANALYSIS_HPP
