#ifndef DAPG_BASELINE_HPP
#define DAPG_BASELINE_HPP

#include "dapg/common.hpp"
#include "dapg/mdp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <vector>

namespace dapg {

/// Per-sample quantities in trajectory order (trajectory by trajectory, time-major).
struct AdvantageBatch {
    Vec returns;
    Vec values;
    Vec advantages;
    Vec normalized;

    Eigen::Index size() const { return advantages.size(); }
};

/// Linear value function on quadratic state features plus time features.
class LinearValueFunction {
public:
    LinearValueFunction() = default;
    LinearValueFunction(int state_dim, int horizon, int max_pairwise = 8)
        : state_dim_(state_dim), horizon_(horizon), max_pairwise_(std::min(max_pairwise, state_dim))
    {
    }

    int feature_count() const
    {
        const int p = max_pairwise_;
        return 2 * state_dim_ + p * (p - 1) / 2 + 3;
    }

    Vec features(const Vec& s, int t) const
    {
        Vec f(feature_count());
        Eigen::Index k = 0;
        for (int i = 0; i < state_dim_; ++i)
            f[k++] = s[i];
        for (int i = 0; i < state_dim_; ++i)
            f[k++] = s[i] * s[i];
        for (int i = 0; i < max_pairwise_; ++i)
            for (int j = i + 1; j < max_pairwise_; ++j)
                f[k++] = s[i] * s[j];
        const double tau = static_cast<double>(t) / horizon_;
        f[k++] = tau;
        f[k++] = tau * tau;
        f[k++] = 1.0;
        return f;
    }

    double predict(const Vec& s, int t) const
    {
        if (weights_.size() == 0)
            return 0.0;
        return features(s, t).dot(weights_);
    }

    bool is_zero() const { return weights_.size() == 0; }
    const Vec& weights() const { return weights_; }
    void set_weights(Vec w) { weights_ = std::move(w); }

private:
    int state_dim_ = 0;
    int horizon_ = 1;
    int max_pairwise_ = 0;
    Vec weights_;
};

/// Discounted reward-to-go for every step of every trajectory.
inline Vec reward_to_go(const std::vector<Trajectory>& trajs, double discount)
{
    Eigen::Index n = 0;
    for (const auto& t : trajs)
        n += static_cast<Eigen::Index>(t.size());
    Vec out(n);
    Eigen::Index base = 0;
    for (const auto& t : trajs) {
        double acc = 0.0;
        for (Eigen::Index k = static_cast<Eigen::Index>(t.size()) - 1; k >= 0; --k) {
            acc = t.transitions[static_cast<std::size_t>(k)].reward + discount * acc;
            out[base + k] = acc;
        }
        base += static_cast<Eigen::Index>(t.size());
    }
    return out;
}

/// Ridge least-squares fit of discounted returns on value features. A
/// degenerate system yields the zero baseline.
inline LinearValueFunction fit_baseline(const std::vector<Trajectory>& trajs, double discount, int horizon,
                                        double ridge = 1e-5)
{
    if (trajs.empty())
        throw InputError("fit_baseline: empty trajectory batch");
    int state_dim = 0;
    for (const auto& t : trajs)
        if (!t.empty()) {
            state_dim = static_cast<int>(t.transitions.front().state.size());
            break;
        }
    if (state_dim == 0)
        throw InputError("fit_baseline: all trajectories are empty");

    LinearValueFunction vf(state_dim, horizon);
    const Vec y = reward_to_go(trajs, discount);
    Mat X(y.size(), vf.feature_count());
    Eigen::Index row = 0;
    for (const auto& t : trajs)
        for (std::size_t k = 0; k < t.size(); ++k)
            X.row(row++) = vf.features(t.transitions[k].state, static_cast<int>(k)).transpose();

    Mat gram = X.transpose() * X;
    gram.diagonal().array() += ridge;
    Eigen::LDLT<Mat> ldlt(gram);
    Vec w = ldlt.solve(X.transpose() * y);
    if (ldlt.info() != Eigen::Success || !w.allFinite()) {
        log_warn("fit_baseline: degenerate feature matrix, falling back to zero baseline");
        return vf;
    }
    vf.set_weights(std::move(w));
    return vf;
}

/// Generalized advantage estimation followed by batch normalization. The value
/// after the last step of each trajectory is taken as zero (finite horizon).
inline AdvantageBatch compute_advantages(const std::vector<Trajectory>& trajs, const LinearValueFunction& vf,
                                         double discount, double gae_lambda)
{
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
        throw ConfigError("gae_lambda must lie in [0,1]");
    AdvantageBatch out;
    out.returns = reward_to_go(trajs, discount);
    const Eigen::Index n = out.returns.size();
    out.values.resize(n);
    out.advantages.resize(n);
    Eigen::Index base = 0;
    for (const auto& t : trajs) {
        const auto len = static_cast<Eigen::Index>(t.size());
        for (Eigen::Index k = 0; k < len; ++k)
            out.values[base + k] = vf.predict(t.transitions[static_cast<std::size_t>(k)].state, static_cast<int>(k));
        double running = 0.0;
        for (Eigen::Index k = len - 1; k >= 0; --k) {
            const double v_next = (k + 1 < len) ? out.values[base + k + 1] : 0.0;
            const double td = t.transitions[static_cast<std::size_t>(k)].reward + discount * v_next - out.values[base + k];
            running = td + discount * gae_lambda * running;
            out.advantages[base + k] = running;
        }
        base += len;
    }
    out.normalized = out.advantages;
    if (n > 0) {
        const double mu = out.advantages.mean();
        out.normalized.array() -= mu;
        const double sd = std::sqrt(out.normalized.squaredNorm() / static_cast<double>(n));
        if (sd > 1e-8)
            out.normalized /= sd;
    }
    return out;
}

} // namespace dapg

#endif
