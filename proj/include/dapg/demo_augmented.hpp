#ifndef DAPG_DEMO_AUGMENTED_HPP
#define DAPG_DEMO_AUGMENTED_HPP

#include "dapg/demos.hpp"
#include "dapg/npg.hpp"
#include "dapg/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace dapg {

enum class BcOptimizer { sgd, adam };

struct DAPGConfig {
    double lambda0 = 0.1;
    double lambda1 = 0.95;
    int bc_epochs = 100;
    double bc_step_size = 1e-3;
    int bc_batch = 64;
    BcOptimizer bc_optimizer = BcOptimizer::adam;
    // Ablation toggles; both off by default.
    bool reset_logstd_after_bc = false;
    bool demos_in_fisher = false;
    NPGConfig npg{};

    void validate() const
    {
        npg.validate();
        if (lambda0 < 0.0)
            throw ConfigError("lambda0 must be non-negative");
        if (!(lambda1 >= 0.0 && lambda1 <= 1.0))
            throw ConfigError("lambda1 must lie in [0,1]");
        if (bc_epochs < 0)
            throw ConfigError("bc_epochs must be non-negative");
        if (!(bc_step_size > 0.0))
            throw ConfigError("bc_step_size must be positive");
        if (bc_batch < 1)
            throw ConfigError("bc_batch must be >= 1");
    }
};

/// Mean negative log-likelihood of the batch under the policy.
inline double mean_nll(const GaussianMlpPolicy& policy, const SampleBatch& batch)
{
    return -policy.log_prob_batch(batch).mean();
}

struct BcResult {
    GaussianMlpPolicy policy;
    double initial_nll = 0.0;
    double final_nll = 0.0;
    std::vector<double> epoch_nll;
    double wall_time = 0.0;
};

/// Maximum-likelihood fit to demonstration (s, a) pairs by mini-batch gradient
/// ascent. bc_batch >= dataset size gives full-batch steps.
inline BcResult behavior_clone(const GaussianMlpPolicy& init, const SampleBatch& demos, const DAPGConfig& cfg,
                               std::uint64_t seed)
{
    if (demos.empty())
        throw ConfigError("behavior_clone: empty demonstration set");
    if (demos.observations.rows() != init.observation_dim() || demos.actions.rows() != init.action_dim())
        throw ConfigError("behavior_clone: demonstration dimensions do not match policy");

    const auto t0 = std::chrono::steady_clock::now();
    BcResult out{init, mean_nll(init, demos), 0.0, {}, 0.0};
    Vec theta = init.params();
    const Eigen::Index n = demos.size();
    const Eigen::Index P = theta.size();
    Vec m = Vec::Zero(P), v = Vec::Zero(P);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    GaussianMlpPolicy current = init;
    for (int epoch = 0; epoch < cfg.bc_epochs; ++epoch) {
        if (cfg.bc_batch < n) {
            std::mt19937_64 rng(derive_seed(seed, Stream::bc_shuffle, static_cast<std::uint64_t>(epoch)));
            std::shuffle(order.begin(), order.end(), rng);
        }
        for (Eigen::Index start = 0; start < n; start += cfg.bc_batch) {
            const Eigen::Index len = std::min<Eigen::Index>(cfg.bc_batch, n - start);
            SampleBatch mb;
            if (len == n && cfg.bc_batch >= n) {
                mb = demos;
            } else {
                mb.observations.resize(demos.observations.rows(), len);
                mb.actions.resize(demos.actions.rows(), len);
                for (Eigen::Index i = 0; i < len; ++i) {
                    mb.observations.col(i) = demos.observations.col(order[static_cast<std::size_t>(start + i)]);
                    mb.actions.col(i) = demos.actions.col(order[static_cast<std::size_t>(start + i)]);
                }
            }
            const Vec grad = current.mean_loglik_gradient(mb);
            if (cfg.bc_optimizer == BcOptimizer::sgd) {
                theta += cfg.bc_step_size * grad;
            } else {
                ++step;
                m = beta1 * m + (1.0 - beta1) * grad;
                v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                theta.array() += cfg.bc_step_size * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
            }
            current = init.with_params(theta);
            theta = current.params(); // keep the log-std clamp
        }
        out.epoch_nll.push_back(mean_nll(current, demos));
    }
    if (cfg.reset_logstd_after_bc) {
        theta.segment(init.manifest().logstd_offset(), init.action_dim()) =
            init.params().segment(init.manifest().logstd_offset(), init.action_dim());
        current = init.with_params(theta);
    }
    out.final_nll = mean_nll(current, demos);
    out.policy = std::move(current);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline BcResult behavior_clone(const GaussianMlpPolicy& init, const DemoDataset& demos, const DAPGConfig& cfg,
                               std::uint64_t seed)
{
    if (demos.trajectories.empty())
        throw ConfigError("behavior_clone: empty demonstration set");
    return behavior_clone(init, demos.batch(), cfg, seed);
}

/// w_k = lambda0 * lambda1^k * max advantage, clamped at zero.
inline double demo_weight(int k, double max_advantage, const DAPGConfig& cfg)
{
    if (k < 0)
        throw ConfigError("demo_weight: iteration must be non-negative");
    const double w = cfg.lambda0 * std::pow(cfg.lambda1, static_cast<double>(k)) * max_advantage;
    return std::max(0.0, w);
}

/// On-policy term plus w times the mean demonstration score. Each sum is
/// averaged over its own sample count. With w == 0 the result is bit-identical
/// to vanilla_policy_gradient.
inline Vec augmented_gradient(const Mat& policy_scores, const Vec& advantages, const Mat& demo_scores, double w)
{
    if (w < 0.0)
        throw ConfigError("augmented_gradient: weight must be non-negative");
    const Eigen::Index P = policy_scores.cols() > 0 ? policy_scores.rows() : demo_scores.rows();
    Vec g = policy_scores.cols() > 0 ? vanilla_policy_gradient(policy_scores, advantages) : Vec(Vec::Zero(P));
    if (w != 0.0 && demo_scores.cols() > 0) {
        if (demo_scores.rows() != P)
            throw ConfigError("augmented_gradient: score dimension mismatch");
        g += w * (demo_scores.rowwise().sum() / static_cast<double>(demo_scores.cols()));
    }
    return g;
}

struct DapgResult {
    TrainResult train;
    BcResult bc;
};

/// Behavior cloning followed by natural-gradient fine-tuning on the augmented
/// gradient. The Fisher matrix uses on-policy samples unless demos_in_fisher.
inline DapgResult train_dapg(const EnvFactory& factory, const GaussianMlpPolicy& init, const DemoDataset& demos,
                             const DAPGConfig& cfg, std::uint64_t seed, const IterationCallback& on_iteration = {})
{
    cfg.validate();
    demos.require_compatible(EnvFingerprint{factory.kind, factory.variation, demo_format_version});
    const SampleBatch demo_batch = demos.batch();
    BcResult bc = behavior_clone(init, demo_batch, cfg, seed);

    auto augment = [&](int k, const AdvantageBatch& adv, const GaussianMlpPolicy& policy, Vec& g) {
        const double max_adv = adv.size() > 0 ? adv.normalized.maxCoeff() : 0.0;
        detail::Augmentation aug;
        aug.weight = demo_weight(k, max_adv, cfg);
        if (aug.weight != 0.0 || cfg.demos_in_fisher) {
            Mat ds = policy.score_matrix(demo_batch);
            if (aug.weight != 0.0)
                g += aug.weight * (ds.rowwise().sum() / static_cast<double>(ds.cols()));
            if (cfg.demos_in_fisher)
                aug.fisher_extra = std::move(ds);
        }
        return aug;
    };
    TrainResult tr = detail::optimize_policy(factory, bc.policy, cfg.npg, seed, augment, on_iteration, bc.final_nll);
    return {std::move(tr), std::move(bc)};
}

} // namespace dapg

#endif
