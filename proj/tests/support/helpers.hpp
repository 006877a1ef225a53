#pragma once

#include "dapg/policy.hpp"

#include <random>

namespace dapg::testing {

inline MlpManifest manifest(int in, std::vector<int> hidden, int out)
{
    MlpManifest m;
    m.input_dim = in;
    m.hidden = std::move(hidden);
    m.output_dim = out;
    return m;
}

// Policy with every parameter (log-std included) drawn from N(0, scale^2).
inline GaussianMlpPolicy random_policy(const MlpManifest& m, std::uint64_t seed, double scale = 0.5)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Vec flat(m.param_count());
    for (auto& x : flat)
        x = n(rng);
    return GaussianMlpPolicy(m, flat);
}

inline Vec random_vec(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> d(0.0, scale);
    Vec v(n);
    for (auto& x : v)
        x = d(rng);
    return v;
}

inline SampleBatch random_batch(const GaussianMlpPolicy& p, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    SampleBatch b;
    b.observations.resize(p.observation_dim(), n);
    b.actions.resize(p.action_dim(), n);
    for (int i = 0; i < n; ++i) {
        b.observations.col(i) = random_vec(p.observation_dim(), rng);
        b.actions.col(i) = p.sample(b.observations.col(i), rng, false).action;
    }
    return b;
}

} // namespace dapg::testing
