#include "dapg/checkpoint.hpp"
#include "dapg/policy.hpp"

#include "support/helpers.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

using namespace dapg;
using dapg::testing::manifest;
using dapg::testing::random_batch;
using dapg::testing::random_policy;
using dapg::testing::random_vec;

namespace {

Vec central_difference(const GaussianMlpPolicy& p, const Vec& s, const Vec& a, double h)
{
    Vec fd(p.param_count());
    for (Eigen::Index k = 0; k < p.param_count(); ++k) {
        Vec up = p.params(), down = p.params();
        up[k] += h;
        down[k] -= h;
        fd[k] = (p.with_params(up).log_prob(s, a) - p.with_params(down).log_prob(s, a)) / (2.0 * h);
    }
    return fd;
}

double worst_relative_error(const Vec& g, const Vec& fd)
{
    double worst = 0.0;
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double scale = std::max({std::abs(fd[k]), std::abs(g[k]), 1e-6});
        worst = std::max(worst, std::abs(g[k] - fd[k]) / scale);
    }
    return worst;
}

Mat explicit_fisher(const Mat& scores)
{
    Mat F = Mat::Zero(scores.rows(), scores.rows());
    for (Eigen::Index i = 0; i < scores.cols(); ++i)
        F += scores.col(i) * scores.col(i).transpose();
    return F / static_cast<double>(scores.cols());
}

} // namespace

TEST(Manifest, ParameterCountAndLayout)
{
    const auto m = manifest(3, {4, 5}, 2);
    EXPECT_EQ(m.param_count(), 4 * 3 + 4 + 5 * 4 + 5 + 2 * 5 + 2 + 2);
    EXPECT_EQ(m.layer_offset(1), 16);
    EXPECT_EQ(m.logstd_offset(), m.param_count() - 2);
    EXPECT_THROW(GaussianMlpPolicy(m, Vec::Zero(m.param_count() - 1)), ConfigError);
    auto bad = m;
    bad.activation = "relu";
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Policy, InitializationConventions)
{
    const auto m = manifest(6, {32, 32}, 3);
    const auto p = GaussianMlpPolicy::initialize(m, 17);
    EXPECT_EQ(p.log_std(), Vec::Zero(3));
    EXPECT_EQ(p.bias(0), Vec::Zero(32));
    EXPECT_LT(p.weights(2).cwiseAbs().maxCoeff(), 0.01);
    EXPECT_GT(p.weights(0).cwiseAbs().maxCoeff(), 0.3);
    EXPECT_EQ(p.params(), GaussianMlpPolicy::initialize(m, 17).params());
    EXPECT_NE(p.params(), GaussianMlpPolicy::initialize(m, 18).params());
}

TEST(Policy, LogStdIsClamped)
{
    const auto m = manifest(2, {}, 2);
    Vec flat = Vec::Zero(m.param_count());
    flat.tail(2) << -100.0, 100.0;
    const GaussianMlpPolicy p(m, flat);
    EXPECT_EQ(p.log_std()[0], logstd_min);
    EXPECT_EQ(p.log_std()[1], logstd_max);
}

TEST(Policy, NonFiniteObservationIsInputError)
{
    const auto p = GaussianMlpPolicy::initialize(manifest(2, {3}, 1), 0);
    Vec s(2);
    s << 1.0, std::nan("");
    EXPECT_THROW(p.act(s, 0), InputError);
    EXPECT_THROW(p.mean(Vec::Zero(3)), ConfigError);
}

TEST(Policy, LogProbAtMeanWithUnitStd)
{
    const auto p = GaussianMlpPolicy::initialize(manifest(4, {8}, 2), 1);
    const Vec s = Vec::LinSpaced(4, -1.0, 1.0);
    EXPECT_NEAR(p.log_prob(s, p.mean(s)), -std::log(2.0 * std::numbers::pi), 1e-14);
}

TEST(Policy, ActLogProbConsistency)
{
    const auto p = random_policy(manifest(3, {5, 4}, 2), 8);
    std::mt19937_64 rng(1);
    for (std::uint64_t k = 0; k < 200; ++k) {
        const Vec s = random_vec(3, rng);
        const PolicySample out = p.act(s, k);
        ASSERT_TRUE(out.log_prob.has_value());
        EXPECT_NEAR(*out.log_prob, p.log_prob(s, out.action), 1e-12);
        EXPECT_EQ(out.action, p.act(s, k).action);
    }
}

TEST(Policy, MinimumStdActsAsMean)
{
    const auto m = manifest(3, {6}, 2);
    Vec flat = random_policy(m, 4).params();
    flat.tail(2).setConstant(-50.0);
    const GaussianMlpPolicy p(m, flat);
    std::mt19937_64 rng(2);
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const Vec s = random_vec(3, rng);
        EXPECT_LE((p.act(s, k).action - p.mean(s)).cwiseAbs().maxCoeff(), 6.0 * std::exp(logstd_min));
    }
}

TEST(Policy, DensityIntegratesToOne)
{
    // Uniform-proposal Monte Carlo over a +-6 sigma box.
    const auto p = random_policy(manifest(2, {4}, 2), 11, 0.4);
    const Vec s = Vec::Constant(2, 0.3);
    const Vec mu = p.mean(s);
    const Vec sd = p.log_std().array().exp();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    const double volume = 12.0 * sd[0] * 12.0 * sd[1];
    double total = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        Vec a(2);
        a << mu[0] + sd[0] * u(rng), mu[1] + sd[1] * u(rng);
        total += std::exp(p.log_prob(s, a));
    }
    const double integral = volume * total / n;
    EXPECT_GE(integral, 0.97);
    EXPECT_LE(integral, 1.03);
}

TEST(Policy, ScoreHasZeroMean)
{
    const auto p = random_policy(manifest(3, {4}, 2), 21, 0.5);
    const Vec s = Vec::LinSpaced(3, -0.5, 0.8);
    const int n = 100000;
    SampleBatch b;
    b.observations = s.replicate(1, n);
    b.actions.resize(2, n);
    std::mt19937_64 rng(6);
    for (int i = 0; i < n; ++i)
        b.actions.col(i) = p.sample(s, rng, false).action;
    const Mat scores = p.score_matrix(b);
    const Vec mean = scores.rowwise().mean();
    for (Eigen::Index k = 0; k < scores.rows(); ++k) {
        const double var = (scores.row(k).array() - mean[k]).square().sum() / (n - 1);
        const double se = std::sqrt(var / n);
        EXPECT_LE(std::abs(mean[k]), 3.0 * se + 1e-15) << "coordinate " << k;
    }
}

TEST(LogprobGrad, MatchesFiniteDifferencesTwoHiddenUnits)
{
    const auto m = manifest(3, {2}, 2);
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_policy(m, 100 + trial);
        const Vec s = random_vec(3, rng);
        const Vec a = random_vec(2, rng);
        worst = std::max(worst, worst_relative_error(p.logprob_grad(s, a), central_difference(p, s, a, 1e-5)));
    }
    EXPECT_LT(worst, 1e-4);
}

TEST(LogprobGrad, LogStdCoordinateIsMinusOneAtMean)
{
    const auto p = random_policy(manifest(3, {4, 4}, 3), 2);
    const Vec s = Vec::Constant(3, 0.2);
    const Vec g = p.logprob_grad(s, p.mean(s));
    for (int i = 0; i < 3; ++i)
        EXPECT_EQ(g[p.manifest().logstd_offset() + i], -1.0);
}

TEST(LogprobGrad, LinearPolicyClosedForm)
{
    const auto m = manifest(3, {}, 2);
    const auto p = random_policy(m, 5);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec s = random_vec(3, rng);
        const Vec a = random_vec(2, rng);
        const Vec inv_var = (-2.0 * p.log_std()).array().exp();
        const Mat expected = ((a - p.mean(s)).array() * inv_var.array()).matrix() * s.transpose();
        const Vec g = p.logprob_grad(s, a);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c)
                EXPECT_NEAR(g[r * 3 + c], expected(r, c), 1e-12);
        EXPECT_NEAR(g[6], (a[0] - p.mean(s)[0]) * inv_var[0], 1e-12);
    }
}

TEST(LogprobGrad, BatchMeanMatchesScoreMatrix)
{
    const auto p = random_policy(manifest(4, {6, 5}, 2), 9);
    const SampleBatch b = random_batch(p, 37, 1);
    const Vec direct = p.score_matrix(b).rowwise().mean();
    EXPECT_LT((direct - p.mean_loglik_gradient(b)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(p.log_prob_batch(b)[5], p.log_prob(b.observations.col(5), b.actions.col(5)), 1e-12);
}

TEST(Fisher, MatchesExplicitOuterProductMatrix)
{
    const auto p = random_policy(manifest(3, {4}, 2), 13);
    ASSERT_LE(p.param_count(), 30);
    const SampleBatch b = random_batch(p, 64, 2);
    const Mat F = explicit_fisher(p.score_matrix(b));
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec v = random_vec(p.param_count(), rng);
        const Vec fv = fisher_vector_product(p, b, v, 1e-3);
        EXPECT_LT((fv - (F * v + 1e-3 * v)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Fisher, ZeroVectorPsdSymmetricLinear)
{
    const auto p = random_policy(manifest(3, {4}, 2), 14);
    const SampleBatch b = random_batch(p, 40, 3);
    const Mat S = p.score_matrix(b);
    EXPECT_EQ(fisher_vector_product(S, Vec::Zero(p.param_count()), 0.5), Vec::Zero(p.param_count()));
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec u = random_vec(p.param_count(), rng);
        const Vec v = random_vec(p.param_count(), rng);
        EXPECT_GE(v.dot(fisher_vector_product(S, v, 0.0)), -1e-12);
        EXPECT_NEAR(u.dot(fisher_vector_product(S, v, 0.0)), v.dot(fisher_vector_product(S, u, 0.0)), 1e-10);
        const Vec lin = fisher_vector_product(S, 2.0 * u + 3.0 * v, 0.0);
        EXPECT_LT((lin - 2.0 * fisher_vector_product(S, u, 0.0) - 3.0 * fisher_vector_product(S, v, 0.0))
                      .cwiseAbs()
                      .maxCoeff(),
                  1e-10);
    }
}

TEST(Fisher, EmptyBatchIsInputError)
{
    const auto p = random_policy(manifest(3, {4}, 2), 14);
    SampleBatch empty;
    empty.observations.resize(3, 0);
    empty.actions.resize(2, 0);
    EXPECT_THROW(fisher_vector_product(p, empty, Vec::Zero(p.param_count()), 0.0), InputError);
    EXPECT_THROW(fisher_vector_product(Mat(p.param_count(), 0), Vec::Zero(p.param_count()), 0.0), InputError);
}

TEST(Checkpoint, RoundTripIsBitExact)
{
    const auto p = random_policy(manifest(5, {7, 3}, 2), 31);
    const std::string text = checkpoint_to_string(p);
    const auto back = checkpoint_from_string(text);
    EXPECT_EQ(back.params(), p.params());
    EXPECT_EQ(back.manifest(), p.manifest());
    EXPECT_EQ(checkpoint_to_string(back), text);

    const auto path = std::filesystem::temp_directory_path() / "dapg_policy_roundtrip.json";
    save_checkpoint(p, path);
    EXPECT_EQ(load_checkpoint(path).params(), p.params());
    std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptInputIsDataError)
{
    const auto p = random_policy(manifest(2, {3}, 1), 1);
    const std::string text = checkpoint_to_string(p);
    EXPECT_THROW(checkpoint_from_string(text.substr(0, text.size() / 2)), DataError);
    EXPECT_THROW(checkpoint_from_string("{}\n[]"), DataError);
    EXPECT_THROW(load_checkpoint("/nonexistent/dapg.ckpt"), DataError);
}
