#ifndef DAPG_POLICY_HPP
#define DAPG_POLICY_HPP

#include "dapg/common.hpp"
#include "dapg/mdp.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace dapg {

inline constexpr double logstd_min = -5.0;
inline constexpr double logstd_max = 2.0;

/// Layer layout of the mean network. Parameters are packed layer by layer as
/// (W row-major, b), followed by one log-std entry per action dimension.
struct MlpManifest {
    int input_dim = 0;
    std::vector<int> hidden{32, 32};
    int output_dim = 0;
    std::string activation = "tanh";

    int num_layers() const { return static_cast<int>(hidden.size()) + 1; }

    int layer_in(int l) const { return l == 0 ? input_dim : hidden[static_cast<std::size_t>(l - 1)]; }
    int layer_out(int l) const { return l == num_layers() - 1 ? output_dim : hidden[static_cast<std::size_t>(l)]; }

    Eigen::Index layer_offset(int l) const
    {
        Eigen::Index off = 0;
        for (int k = 0; k < l; ++k)
            off += static_cast<Eigen::Index>(layer_out(k)) * (layer_in(k) + 1);
        return off;
    }

    Eigen::Index logstd_offset() const { return layer_offset(num_layers()); }
    Eigen::Index param_count() const { return logstd_offset() + output_dim; }

    void validate() const
    {
        if (input_dim <= 0 || output_dim <= 0)
            throw ConfigError("MlpManifest: input/output dims must be positive");
        for (int h : hidden)
            if (h <= 0)
                throw ConfigError("MlpManifest: hidden widths must be positive");
        if (activation != "tanh")
            throw ConfigError("MlpManifest: unsupported activation '" + activation + "'");
    }

    bool operator==(const MlpManifest&) const = default;
};

/// Column-per-sample batch of (observation, action) pairs.
struct SampleBatch {
    Mat observations; // obs_dim x n
    Mat actions;      // act_dim x n

    Eigen::Index size() const { return observations.cols(); }
    bool empty() const { return observations.cols() == 0; }
};

/// Diagonal-Gaussian policy with a tanh MLP mean and state-independent log-std.
class GaussianMlpPolicy {
public:
    GaussianMlpPolicy(MlpManifest manifest, Vec flat) : manifest_(std::move(manifest)), flat_(std::move(flat))
    {
        manifest_.validate();
        if (flat_.size() != manifest_.param_count())
            throw ConfigError("parameter vector length does not match manifest");
        if (!flat_.allFinite())
            throw InputError("non-finite policy parameters");
        clamp_logstd();
    }

    static GaussianMlpPolicy initialize(MlpManifest manifest, std::uint64_t seed, double final_layer_scale = 0.01)
    {
        manifest.validate();
        Vec flat = Vec::Zero(manifest.param_count());
        std::mt19937_64 rng(derive_seed(seed, Stream::policy_init));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int l = 0; l < manifest.num_layers(); ++l) {
            const int in = manifest.layer_in(l);
            const int out = manifest.layer_out(l);
            double scale = 1.0 / std::sqrt(static_cast<double>(in));
            if (l == manifest.num_layers() - 1)
                scale *= final_layer_scale;
            const Eigen::Index off = manifest.layer_offset(l);
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(out) * in; ++k)
                flat[off + k] = scale * normal(rng);
        }
        return GaussianMlpPolicy(std::move(manifest), std::move(flat));
    }

    const MlpManifest& manifest() const { return manifest_; }
    const Vec& params() const { return flat_; }
    Eigen::Index param_count() const { return flat_.size(); }
    int observation_dim() const { return manifest_.input_dim; }
    int action_dim() const { return manifest_.output_dim; }

    GaussianMlpPolicy with_params(Vec flat) const { return GaussianMlpPolicy(manifest_, std::move(flat)); }

    Vec log_std() const { return flat_.segment(manifest_.logstd_offset(), manifest_.output_dim); }

    Vec mean(const Vec& obs) const
    {
        check_observation(obs);
        Vec h = obs;
        const int L = manifest_.num_layers();
        for (int l = 0; l < L; ++l) {
            Vec z = weights(l) * h + bias(l);
            h = (l == L - 1) ? z : Vec(z.array().tanh());
        }
        return h;
    }

    Mat mean_batch(const Mat& obs) const
    {
        Mat h = obs;
        const int L = manifest_.num_layers();
        for (int l = 0; l < L; ++l) {
            Mat z = (weights(l) * h).colwise() + bias(l);
            h = (l == L - 1) ? z : Mat(z.array().tanh());
        }
        return h;
    }

    PolicySample sample(const Vec& obs, std::mt19937_64& rng, bool deterministic) const
    {
        Vec mu = mean(obs);
        if (deterministic)
            return {mu, log_prob_given_mean(mu, mu)};
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec eps(mu.size());
        for (Eigen::Index i = 0; i < eps.size(); ++i)
            eps[i] = normal(rng);
        Vec a = mu + (log_std().array().exp() * eps.array()).matrix();
        return {a, log_prob_given_mean(mu, a)};
    }

    PolicySample act(const Vec& obs, std::uint64_t noise_seed) const
    {
        std::mt19937_64 rng(noise_seed);
        return sample(obs, rng, false);
    }

    double log_prob(const Vec& obs, const Vec& action) const
    {
        if (action.size() != action_dim())
            throw ConfigError("action dimension mismatch");
        return log_prob_given_mean(mean(obs), action);
    }

    Vec log_prob_batch(const SampleBatch& batch) const
    {
        Mat mu = mean_batch(batch.observations);
        Vec ls = log_std();
        Mat z = (batch.actions - mu).array().colwise() * (-ls).array().exp();
        const double c = -ls.sum() - 0.5 * action_dim() * std::log(2.0 * std::numbers::pi);
        return (c - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
    }

    /// Gradient of ln pi(a|s) with respect to the flat parameters.
    Vec logprob_grad(const Vec& obs, const Vec& action) const
    {
        check_observation(obs);
        if (action.size() != action_dim())
            throw ConfigError("action dimension mismatch");
        SampleBatch b{obs, action};
        return score_matrix(b).col(0);
    }

    /// Per-sample scores, one column per sample (param_count x n).
    Mat score_matrix(const SampleBatch& batch) const
    {
        check_batch(batch);
        const Eigen::Index n = batch.size();
        Mat scores(param_count(), n);
        Forward fw = forward(batch.observations);
        const Vec ls = log_std();
        const Vec inv_var = (-2.0 * ls).array().exp();
        Mat delta = (batch.actions - fw.activations.back()).array().colwise() * inv_var.array();
        // d/d logstd = -1 + ((a - mu)/sigma)^2
        Mat zsq = (batch.actions - fw.activations.back()).array().square().colwise() * inv_var.array();
        scores.bottomRows(action_dim()) = (zsq.array() - 1.0).matrix();

        const int L = manifest_.num_layers();
        for (int l = L - 1; l >= 0; --l) {
            const Mat& input = fw.activations[static_cast<std::size_t>(l)];
            const int in = manifest_.layer_in(l);
            const int out = manifest_.layer_out(l);
            const Eigen::Index off = manifest_.layer_offset(l);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (int r = 0; r < out; ++r) {
                    const double d = delta(r, i);
                    double* w = scores.data() + i * scores.rows() + off + static_cast<Eigen::Index>(r) * in;
                    for (int c = 0; c < in; ++c)
                        w[c] = d * input(c, i);
                }
                scores.block(off + static_cast<Eigen::Index>(out) * in, i, out, 1) = delta.col(i);
            }
            if (l > 0)
                delta = (weights(l).transpose() * delta).array() * (1.0 - input.array().square());
        }
        return scores;
    }

    /// Gradient of the mean log-likelihood over a batch (no per-sample storage).
    Vec mean_loglik_gradient(const SampleBatch& batch) const
    {
        check_batch(batch);
        const double inv_n = 1.0 / static_cast<double>(batch.size());
        Vec grad = Vec::Zero(param_count());
        Forward fw = forward(batch.observations);
        const Vec inv_var = (-2.0 * log_std()).array().exp();
        Mat resid = batch.actions - fw.activations.back();
        Mat delta = resid.array().colwise() * inv_var.array();
        Mat zsq = resid.array().square().colwise() * inv_var.array();
        grad.tail(action_dim()) = ((zsq.array() - 1.0).rowwise().sum() * inv_n).matrix();

        const int L = manifest_.num_layers();
        for (int l = L - 1; l >= 0; --l) {
            const Mat& input = fw.activations[static_cast<std::size_t>(l)];
            const int in = manifest_.layer_in(l);
            const int out = manifest_.layer_out(l);
            const Eigen::Index off = manifest_.layer_offset(l);
            Mat gw = delta * input.transpose() * inv_n; // out x in
            for (int r = 0; r < out; ++r)
                for (int c = 0; c < in; ++c)
                    grad[off + static_cast<Eigen::Index>(r) * in + c] = gw(r, c);
            grad.segment(off + static_cast<Eigen::Index>(out) * in, out) = delta.rowwise().sum() * inv_n;
            if (l > 0)
                delta = (weights(l).transpose() * delta).array() * (1.0 - input.array().square());
        }
        return grad;
    }

    Mat weights(int l) const
    {
        const int in = manifest_.layer_in(l);
        const int out = manifest_.layer_out(l);
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            flat_.data() + manifest_.layer_offset(l), out, in);
    }

    Vec bias(int l) const
    {
        const int in = manifest_.layer_in(l);
        const int out = manifest_.layer_out(l);
        return flat_.segment(manifest_.layer_offset(l) + static_cast<Eigen::Index>(out) * in, out);
    }

private:
    struct Forward {
        std::vector<Mat> activations; // input, hidden..., mean
    };

    Forward forward(const Mat& obs) const
    {
        Forward fw;
        fw.activations.reserve(static_cast<std::size_t>(manifest_.num_layers()) + 1);
        fw.activations.push_back(obs);
        const int L = manifest_.num_layers();
        for (int l = 0; l < L; ++l) {
            Mat z = (weights(l) * fw.activations.back()).colwise() + bias(l);
            fw.activations.push_back(l == L - 1 ? z : Mat(z.array().tanh()));
        }
        return fw;
    }

    double log_prob_given_mean(const Vec& mu, const Vec& a) const
    {
        Vec ls = log_std();
        Vec z = ((a - mu).array() * (-ls).array().exp()).matrix();
        return -ls.sum() - 0.5 * z.squaredNorm() - 0.5 * action_dim() * std::log(2.0 * std::numbers::pi);
    }

    void clamp_logstd()
    {
        auto seg = flat_.segment(manifest_.logstd_offset(), manifest_.output_dim);
        seg = seg.cwiseMax(logstd_min).cwiseMin(logstd_max);
    }

    void check_observation(const Vec& obs) const
    {
        if (obs.size() != observation_dim())
            throw ConfigError("observation dimension mismatch");
        if (!obs.allFinite())
            throw InputError("non-finite observation");
    }

    void check_batch(const SampleBatch& batch) const
    {
        if (batch.observations.rows() != observation_dim() || batch.actions.rows() != action_dim() ||
            batch.observations.cols() != batch.actions.cols())
            throw ConfigError("sample batch dimensions do not match policy");
    }

    MlpManifest manifest_;
    Vec flat_;
};

/// (F + damping I) v with F the empirical Fisher (1/n) sum_i s_i s_i^T built
/// from a column-per-sample score matrix.
inline Vec fisher_vector_product(const Mat& scores, const Vec& v, double damping)
{
    if (scores.cols() == 0)
        throw InputError("fisher_vector_product: empty batch");
    if (damping < 0.0)
        throw ConfigError("fisher_vector_product: damping must be non-negative");
    if (v.size() != scores.rows())
        throw ConfigError("fisher_vector_product: vector length mismatch");
    Vec sv = scores.transpose() * v;
    return scores * sv / static_cast<double>(scores.cols()) + damping * v;
}

inline Vec fisher_vector_product(const GaussianMlpPolicy& policy, const SampleBatch& batch, const Vec& v, double damping)
{
    if (batch.empty())
        throw InputError("fisher_vector_product: empty batch");
    return fisher_vector_product(policy.score_matrix(batch), v, damping);
}

/// Stacks the (state, action) pairs of a set of trajectories into one batch.
inline SampleBatch make_batch(const std::vector<Trajectory>& trajs)
{
    Eigen::Index n = 0;
    for (const auto& t : trajs)
        n += static_cast<Eigen::Index>(t.size());
    SampleBatch b;
    if (n == 0)
        return b;
    const auto nonempty = std::find_if(trajs.begin(), trajs.end(), [](const Trajectory& t) { return !t.empty(); });
    const Transition& first = nonempty->transitions.front();
    b.observations.resize(first.state.size(), n);
    b.actions.resize(first.action.size(), n);
    Eigen::Index i = 0;
    for (const auto& t : trajs)
        for (const auto& tr : t.transitions) {
            b.observations.col(i) = tr.state;
            b.actions.col(i) = tr.action;
            ++i;
        }
    return b;
}

} // namespace dapg

#endif
