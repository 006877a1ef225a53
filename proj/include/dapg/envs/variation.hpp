#ifndef DAPG_ENVS_VARIATION_HPP
#define DAPG_ENVS_VARIATION_HPP

#include "dapg/common.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>

namespace dapg {

/// Multiplicative perturbation of the manipulated object's physical properties.
struct ObjectVariation {
    double mass_scale = 1.0;
    double size_scale = 1.0;

    void validate() const
    {
        if (!(mass_scale > 0.0) || !(size_scale > 0.0) || !std::isfinite(mass_scale) || !std::isfinite(size_scale))
            throw ConfigError("object variation scales must be positive and finite");
    }

    bool operator==(const ObjectVariation&) const = default;
};

struct EnsembleRanges {
    double mass_low = 1.0;
    double mass_high = 1.0;
    double size_low = 1.0;
    double size_high = 1.0;

    void validate() const
    {
        if (!(mass_low <= mass_high) || !(size_low <= size_high))
            throw ConfigError("ensemble ranges must satisfy low <= high");
        if (!(mass_low > 0.0) || !(size_low > 0.0))
            throw ConfigError("ensemble ranges must be positive");
    }

    bool operator==(const EnsembleRanges&) const = default;
};

/// Uniform draw of (mass, size) scales; one draw per training episode.
inline ObjectVariation sample_env_ensemble(const EnsembleRanges& ranges, std::uint64_t seed)
{
    ranges.validate();
    std::mt19937_64 rng(derive_seed(seed, Stream::ensemble));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ObjectVariation v;
    v.mass_scale = ranges.mass_low + (ranges.mass_high - ranges.mass_low) * u(rng);
    v.size_scale = ranges.size_low + (ranges.size_high - ranges.size_low) * u(rng);
    return v;
}

using Vec2 = Eigen::Vector2d;

/// Keeps a point inside the [-1,1]^2 workspace; velocity into a wall is zeroed.
inline void clamp_to_workspace(Vec2& p, Vec2& v, double half_width = 1.0)
{
    for (int i = 0; i < 2; ++i) {
        if (p[i] > half_width) {
            p[i] = half_width;
            v[i] = std::min(v[i], 0.0);
        } else if (p[i] < -half_width) {
            p[i] = -half_width;
            v[i] = std::max(v[i], 0.0);
        }
    }
}

inline Vec2 clip_norm(const Vec2& v, double max_norm)
{
    const double n = v.norm();
    return n > max_norm ? Vec2(v * (max_norm / n)) : v;
}

inline constexpr double viscous_damping = 0.1;

} // namespace dapg

#endif
