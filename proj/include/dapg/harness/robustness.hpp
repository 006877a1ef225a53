#ifndef DAPG_HARNESS_ROBUSTNESS_HPP
#define DAPG_HARNESS_ROBUSTNESS_HPP

#include "dapg/envs/registry.hpp"
#include "dapg/policy.hpp"
#include "dapg/sampling.hpp"

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace dapg {

/// Success rates of one policy over a mass x size grid of object variations.
struct RobustnessGrid {
    std::vector<double> mass_scales;
    std::vector<double> size_scales;
    Mat success; // rows: mass, cols: size

    double mean() const { return success.size() ? success.mean() : 0.0; }
};

/// Every cell uses the same reset seeds, so differences between cells come
/// from the variation alone.
inline RobustnessGrid robustness_sweep(const GaussianMlpPolicy& policy, EnvKind kind,
                                       const std::vector<double>& mass_scales, const std::vector<double>& size_scales,
                                       int n_eval, std::uint64_t seed, int threads = 1, int horizon = 100)
{
    if (mass_scales.empty() || size_scales.empty())
        throw ConfigError("robustness_sweep: grid axes must be non-empty");
    RobustnessGrid g{mass_scales, size_scales, Mat(mass_scales.size(), size_scales.size())};
    EnvFactory f;
    f.kind = kind;
    f.reward_mode = RewardMode::sparse;
    f.horizon = horizon;
    for (std::size_t i = 0; i < mass_scales.size(); ++i)
        for (std::size_t j = 0; j < size_scales.size(); ++j) {
            f.variation = ObjectVariation{mass_scales[i], size_scales[j]};
            f.variation.validate();
            g.success(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                evaluate_success(policy, f, n_eval, seed, 0, threads, false).mean_action_rate;
        }
    return g;
}

/// Heatmap CSV: header row of size scales, one row per mass scale.
inline std::string grid_to_csv(const RobustnessGrid& g)
{
    std::ostringstream os;
    os << std::setprecision(10) << "mass_scale\\size_scale";
    for (double s : g.size_scales)
        os << ',' << s;
    os << '\n';
    for (std::size_t i = 0; i < g.mass_scales.size(); ++i) {
        os << g.mass_scales[i];
        for (std::size_t j = 0; j < g.size_scales.size(); ++j)
            os << ',' << g.success(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        os << '\n';
    }
    return os.str();
}

} // namespace dapg

#endif
