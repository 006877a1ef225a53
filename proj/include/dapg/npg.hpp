#ifndef DAPG_NPG_HPP
#define DAPG_NPG_HPP

#include "dapg/baseline.hpp"
#include "dapg/policy.hpp"
#include "dapg/sampling.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace dapg {

struct NPGConfig {
    double delta = 0.05;
    int cg_iters = 25;
    double cg_residual_tol = 1e-10;
    double fisher_damping = 1e-4;
    int traj_per_iter = 20;
    int max_iters = 100;
    double discount = 0.995;
    double gae_lambda = 0.97;
    int n_eval = 100;
    double success_threshold = 0.9;
    // Stop once evaluation success reaches the threshold (the policy that
    // reached it is kept as the final policy).
    bool stop_at_threshold = false;
    bool eval_stochastic = false;
    bool log_wall_time = false;
    int threads = 1;

    void validate() const
    {
        if (!(delta > 0.0))
            throw ConfigError("delta must be positive");
        if (cg_iters < 1)
            throw ConfigError("cg_iters must be >= 1");
        if (!(cg_residual_tol > 0.0))
            throw ConfigError("cg_residual_tol must be positive");
        if (fisher_damping < 0.0)
            throw ConfigError("fisher_damping must be non-negative");
        if (traj_per_iter < 1)
            throw ConfigError("traj_per_iter must be >= 1");
        if (max_iters < 0)
            throw ConfigError("max_iters must be >= 0");
        if (!(discount >= 0.0 && discount < 1.0))
            throw ConfigError("discount must lie in [0,1)");
        if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
            throw ConfigError("gae_lambda must lie in [0,1]");
        if (n_eval < 1)
            throw ConfigError("n_eval must be >= 1");
        if (!(success_threshold > 0.0 && success_threshold <= 1.0))
            throw ConfigError("success_threshold must lie in (0,1]");
    }
};

struct KrylovResult {
    Vec x;
    int iterations = 0;
    double residual_norm = 0.0;
    std::vector<double> residual_history;
};

/// Conjugate residual method for symmetric positive (semi)definite systems.
/// Same cost as CG (one operator application per iteration) but the residual
/// norm is minimized over the Krylov subspace, so it never increases.
template <class Operator>
KrylovResult conjugate_residual(Operator&& apply, const Vec& b, int max_iters, double tol)
{
    KrylovResult out;
    out.x = Vec::Zero(b.size());
    Vec r = b;
    double rnorm = r.norm();
    out.residual_history.push_back(rnorm);
    if (rnorm <= tol) {
        out.residual_norm = rnorm;
        return out;
    }
    Vec p = r;
    Vec Ar = apply(r);
    Vec Ap = Ar;
    double rAr = r.dot(Ar);
    for (int k = 0; k < max_iters; ++k) {
        const double ApAp = Ap.squaredNorm();
        if (!(ApAp > 0.0) || !(rAr > 0.0))
            break;
        const double alpha = rAr / ApAp;
        out.x += alpha * p;
        r -= alpha * Ap;
        rnorm = r.norm();
        out.iterations = k + 1;
        out.residual_history.push_back(rnorm);
        if (rnorm <= tol)
            break;
        Ar = apply(r);
        const double rAr_next = r.dot(Ar);
        const double beta = rAr_next / rAr;
        rAr = rAr_next;
        p = r + beta * p;
        Ap = Ar + beta * Ap;
    }
    out.residual_norm = rnorm;
    return out;
}

/// REINFORCE estimate: (1/n) sum_i score_i * advantage_i.
inline Vec vanilla_policy_gradient(const Mat& scores, const Vec& advantages)
{
    if (scores.cols() == 0)
        throw InputError("vanilla_policy_gradient: empty batch");
    if (scores.cols() != advantages.size())
        throw ConfigError("vanilla_policy_gradient: advantage count mismatch");
    return scores * advantages / static_cast<double>(scores.cols());
}

struct StepDiagnostics {
    double g_norm = 0.0;
    double gFx = 0.0;
    double cg_residual = 0.0;
    int cg_iterations = 0;
    double kl_proxy = 0.0;
    double step_norm = 0.0;
    bool skipped = false;
};

struct NaturalStep {
    GaussianMlpPolicy policy;
    StepDiagnostics diagnostics;
};

/// theta' = theta + sqrt(delta / g^T x) x with (F + damping I) x = g solved
/// iteratively from Fisher-vector products of the on-policy scores.
inline NaturalStep natural_gradient_step(const GaussianMlpPolicy& policy, const Mat& scores, const Vec& g,
                                         const NPGConfig& cfg)
{
    StepDiagnostics d;
    d.g_norm = g.norm();
    auto fvp = [&](const Vec& v) { return fisher_vector_product(scores, v, cfg.fisher_damping); };
    KrylovResult sol = conjugate_residual(fvp, g, cfg.cg_iters, cfg.cg_residual_tol);
    d.cg_residual = sol.residual_norm;
    d.cg_iterations = sol.iterations;
    d.gFx = g.dot(sol.x);
    if (!(d.gFx > 1e-12) || !std::isfinite(d.gFx)) {
        d.skipped = true;
        if (d.g_norm > 0.0)
            log_warn("natural_gradient_step: degenerate step (g^T F^-1 g <= 1e-12), update skipped");
        return {policy, d};
    }
    const Vec step = std::sqrt(cfg.delta / d.gFx) * sol.x;
    const Vec Ss = scores.transpose() * step;
    d.kl_proxy = Ss.squaredNorm() / static_cast<double>(scores.cols());
    d.step_norm = step.norm();
    return {policy.with_params(policy.params() + step), d};
}

inline NaturalStep natural_gradient_step(const GaussianMlpPolicy& policy, const SampleBatch& batch,
                                         const Vec& advantages, const NPGConfig& cfg)
{
    const Mat scores = policy.score_matrix(batch);
    return natural_gradient_step(policy, scores, vanilla_policy_gradient(scores, advantages), cfg);
}

struct IterationLog {
    int iter = 0;
    double mean_return = 0.0;
    double success_rate = 0.0;
    std::optional<double> stochastic_success_rate;
    double sample_success_rate = 0.0;
    double g_norm = 0.0;
    double gFx = 0.0;
    double kl_proxy = 0.0;
    double cg_residual = 0.0;
    bool updated = false;
    std::optional<double> w_k;
    std::optional<double> bc_final_nll;
    std::optional<double> wall_time;
};

inline nlohmann::json to_json(const IterationLog& r)
{
    nlohmann::json j;
    j["iter"] = r.iter;
    j["mean_return"] = r.mean_return;
    j["success_rate"] = r.success_rate;
    if (r.stochastic_success_rate)
        j["stochastic_success_rate"] = *r.stochastic_success_rate;
    j["sample_success_rate"] = r.sample_success_rate;
    j["g_norm"] = r.g_norm;
    j["gFx"] = r.gFx;
    j["kl_proxy"] = r.kl_proxy;
    j["cg_residual"] = r.cg_residual;
    j["updated"] = r.updated;
    if (r.w_k)
        j["w_k"] = *r.w_k;
    if (r.bc_final_nll)
        j["bc_final_nll"] = *r.bc_final_nll;
    if (r.wall_time)
        j["wall_time"] = *r.wall_time;
    return j;
}

inline IterationLog iteration_from_json(const nlohmann::json& j)
{
    IterationLog r;
    r.iter = j.at("iter").get<int>();
    r.mean_return = j.at("mean_return").get<double>();
    r.success_rate = j.at("success_rate").get<double>();
    if (j.contains("stochastic_success_rate"))
        r.stochastic_success_rate = j["stochastic_success_rate"].get<double>();
    r.sample_success_rate = j.value("sample_success_rate", 0.0);
    r.g_norm = j.value("g_norm", 0.0);
    r.gFx = j.value("gFx", 0.0);
    r.kl_proxy = j.value("kl_proxy", 0.0);
    r.cg_residual = j.value("cg_residual", 0.0);
    r.updated = j.value("updated", false);
    if (j.contains("w_k"))
        r.w_k = j["w_k"].get<double>();
    if (j.contains("bc_final_nll"))
        r.bc_final_nll = j["bc_final_nll"].get<double>();
    if (j.contains("wall_time"))
        r.wall_time = j["wall_time"].get<double>();
    return r;
}

using LearningCurve = std::vector<IterationLog>;

struct TrainResult {
    LearningCurve curve;
    GaussianMlpPolicy policy;
};

inline constexpr int never_reached = std::numeric_limits<int>::max();

/// First iteration whose evaluation success meets the threshold, or never_reached.
inline int iterations_to_threshold(const LearningCurve& curve, double threshold)
{
    for (const auto& r : curve)
        if (r.success_rate >= threshold)
            return r.iter;
    return never_reached;
}

using IterationCallback = std::function<void(const IterationLog&, const GaussianMlpPolicy&)>;

namespace detail {

struct Augmentation {
    double weight = 0.0;
    // Extra score columns appended to the Fisher batch (empty by default).
    Mat fisher_extra;
};

/// Hook that adds a demonstration term to the on-policy gradient in place.
using GradientAugmenter = std::function<Augmentation(int k, const AdvantageBatch&, const GaussianMlpPolicy&, Vec& g)>;

inline TrainResult optimize_policy(const EnvFactory& factory, GaussianMlpPolicy policy, const NPGConfig& cfg,
                                   std::uint64_t seed, const GradientAugmenter& augment,
                                   const IterationCallback& on_iteration, std::optional<double> bc_final_nll)
{
    cfg.validate();
    const EnvSpec spec = factory.spec();
    if (policy.observation_dim() != spec.state_dim || policy.action_dim() != spec.action_dim)
        throw ConfigError("policy dimensions do not match environment");

    TrainResult result{{}, policy};
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < cfg.max_iters; ++k) {
        IterationLog log;
        log.iter = k;
        log.bc_final_nll = bc_final_nll;
        const SuccessReport eval = evaluate_success(policy, factory, cfg.n_eval, seed, static_cast<std::uint64_t>(k),
                                                    cfg.threads, cfg.eval_stochastic);
        log.success_rate = eval.mean_action_rate;
        if (cfg.eval_stochastic)
            log.stochastic_success_rate = eval.stochastic_rate;

        const auto trajs = sample_trajectories(factory, policy, cfg.traj_per_iter, seed, Stream::train,
                                               static_cast<std::uint64_t>(k), false, cfg.threads);
        log.mean_return = mean_undiscounted_return(trajs);
        log.sample_success_rate = success_fraction(trajs);

        const bool reached = log.success_rate >= cfg.success_threshold;
        if (!(cfg.stop_at_threshold && reached)) {
            const LinearValueFunction vf = fit_baseline(trajs, cfg.discount, factory.horizon);
            const AdvantageBatch adv = compute_advantages(trajs, vf, cfg.discount, cfg.gae_lambda);
            const SampleBatch batch = make_batch(trajs);
            const Mat scores = policy.score_matrix(batch);
            Vec g = vanilla_policy_gradient(scores, adv.normalized);
            Augmentation aug;
            if (augment) {
                aug = augment(k, adv, policy, g);
                log.w_k = aug.weight;
            }
            NaturalStep step = [&] {
                if (aug.fisher_extra.cols() == 0)
                    return natural_gradient_step(policy, scores, g, cfg);
                Mat both(scores.rows(), scores.cols() + aug.fisher_extra.cols());
                both << scores, aug.fisher_extra;
                return natural_gradient_step(policy, both, g, cfg);
            }();
            log.g_norm = step.diagnostics.g_norm;
            log.gFx = step.diagnostics.gFx;
            log.kl_proxy = step.diagnostics.kl_proxy;
            log.cg_residual = step.diagnostics.cg_residual;
            log.updated = !step.diagnostics.skipped;
            policy = std::move(step.policy);
        }
        if (cfg.log_wall_time)
            log.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.curve.push_back(log);
        if (on_iteration)
            on_iteration(log, policy);
        if (cfg.stop_at_threshold && reached)
            break;
    }
    result.policy = std::move(policy);
    return result;
}

} // namespace detail

/// Natural policy gradient from the given initial policy.
inline TrainResult train_npg(const EnvFactory& factory, GaussianMlpPolicy init, const NPGConfig& cfg, std::uint64_t seed,
                             const IterationCallback& on_iteration = {})
{
    return detail::optimize_policy(factory, std::move(init), cfg, seed, {}, on_iteration, std::nullopt);
}

} // namespace dapg

#endif
