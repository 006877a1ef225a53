#include "dapg/envs/registry.hpp"
#include "dapg/experts.hpp"
#include "dapg/policy.hpp"

#include "support/helpers.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace dapg;

namespace {

constexpr EnvKind all_kinds[] = {EnvKind::relocate, EnvKind::pen, EnvKind::door, EnvKind::hammer};

Vec zeros(int n) { return Vec::Zero(n); }

Vec uniform_action(std::mt19937_64& rng, int n, double amp = 1.5)
{
    std::uniform_real_distribution<double> u(-amp, amp);
    Vec a(n);
    for (auto& x : a)
        x = u(rng);
    return a;
}

} // namespace

TEST(Registry, UnknownKindIsConfigError)
{
    EXPECT_THROW(parse_env_kind("cartpole"), ConfigError);
    EXPECT_THROW(parse_reward_mode("dense"), ConfigError);
    for (auto k : all_kinds)
        EXPECT_EQ(parse_env_kind(to_string(k)), k);
}

TEST(Registry, ResetRejectsNonPositiveVariation)
{
    EXPECT_THROW(reset_env(EnvKind::relocate, RewardMode::sparse, ObjectVariation{0.0, 1.0}, 0), ConfigError);
    EXPECT_THROW(reset_env(EnvKind::pen, RewardMode::sparse, ObjectVariation{1.0, -1.0}, 0), ConfigError);
}

TEST(Relocate, ResetInsideWorkspaceAndNotGrasped)
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto [env, obs] = reset_env(EnvKind::relocate, RewardMode::sparse, {}, seed);
        const auto& s = static_cast<RelocateEnv&>(*env).state();
        EXPECT_LE(s.object.cwiseAbs().maxCoeff(), 1.0);
        EXPECT_LE(s.target.cwiseAbs().maxCoeff(), 1.0);
        EXPECT_FALSE(s.grasped);
        EXPECT_EQ(obs[10], 0.0);
    }
}

TEST(Relocate, MassVariationScalesDynamicsOnly)
{
    const RelocateEnv nominal(RewardMode::sparse);
    const RelocateEnv heavy(RewardMode::sparse, ObjectVariation{2.0, 1.0});
    EXPECT_DOUBLE_EQ(heavy.params().object_mass, 2.0 * nominal.params().object_mass);
    EXPECT_DOUBLE_EQ(heavy.params().object_radius, nominal.params().object_radius);
    EXPECT_DOUBLE_EQ(heavy.params().success_epsilon, nominal.params().success_epsilon);
}

TEST(Relocate, ObjectAtTargetSucceedsOnFirstStep)
{
    RelocateEnv env(RewardMode::sparse);
    env.reset(3);
    auto s = env.state();
    s.object = s.target;
    env.set_state(s);
    const StepResult r = env.step(Vec::Zero(3));
    EXPECT_TRUE(r.success);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.reward, 1.0);
}

TEST(Relocate, OracleBoundaryAndMassInvariance)
{
    for (double mass : {0.5, 1.0, 3.0}) {
        RelocateEnv env(RewardMode::sparse, ObjectVariation{mass, 1.0});
        env.reset(0);
        auto s = env.state();
        s.object = s.target + Vec2(env.params().success_epsilon / 2.0, 0.0);
        env.set_state(s);
        EXPECT_TRUE(env.oracle_success());
        s.object = s.target + Vec2(0.0, env.params().success_epsilon * 1.01);
        env.set_state(s);
        EXPECT_FALSE(env.oracle_success());
    }
}

TEST(Relocate, GraspOnlyWithinRadiusAndPositionsBounded)
{
    std::mt19937_64 rng(1);
    ScriptedExpert expert(EnvKind::relocate);
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        RelocateEnv env(RewardMode::shaped, ObjectVariation{1.0 + 0.03 * seed, 0.5 + 0.02 * seed});
        Vec obs = env.reset(seed);
        bool was_grasped = false;
        for (int t = 0; t < 100; ++t) {
            // Mix expert commands with noise so grasps actually happen.
            Vec a = (seed % 2 == 0) ? Vec(expert.act(obs) + 0.3 * uniform_action(rng, 3, 1.0)) : uniform_action(rng, 3);
            obs = env.step(a).observation;
            const auto& s = env.state();
            if (s.grasped && !was_grasped)
                EXPECT_LE((s.hand - s.object).norm(), env.grasp_radius() + 1e-12);
            was_grasped = s.grasped;
            EXPECT_LE(s.hand.cwiseAbs().maxCoeff(), 1.0);
            EXPECT_LE(s.object.cwiseAbs().maxCoeff(), 1.0);
        }
    }
}

TEST(Pen, TargetsCoverFullCircle)
{
    double lo = 10.0, hi = -10.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        PenOrientEnv env(RewardMode::sparse);
        env.reset(seed);
        lo = std::min(lo, env.state().target);
        hi = std::max(hi, env.state().target);
        EXPECT_GT(env.state().target, -std::numbers::pi);
        EXPECT_LE(env.state().target, std::numbers::pi);
    }
    const double slack = 0.05 * 2.0 * std::numbers::pi;
    EXPECT_LT(lo, -std::numbers::pi + slack);
    EXPECT_GT(hi, std::numbers::pi - slack);
}

TEST(Pen, ToleranceBoundaryIsInclusiveBelowExclusiveAbove)
{
    PenOrientEnv env(RewardMode::sparse);
    env.reset(0);
    auto s = env.state();
    s.angle = wrap_angle(s.target + env.params().tolerance * (1.0 + 1e-9));
    env.set_state(s);
    EXPECT_FALSE(env.oracle_success());
    s.angle = wrap_angle(s.target - env.params().tolerance * 0.5);
    env.set_state(s);
    EXPECT_TRUE(env.oracle_success());
}

TEST(Pen, AnglesStayWrapped)
{
    std::mt19937_64 rng(2);
    PenOrientEnv env(RewardMode::shaped);
    env.reset(5);
    for (int t = 0; t < 500; ++t) {
        env.step(Vec::Constant(2, 1.0));
        EXPECT_GT(env.state().angle, -std::numbers::pi);
        EXPECT_LE(env.state().angle, std::numbers::pi);
    }
}

TEST(Door, ZeroActionWithLatchEngagedKeepsDoorClosed)
{
    DoorLatchEnv env(RewardMode::sparse);
    env.reset(4);
    for (int t = 0; t < 100; ++t) {
        env.step(zeros(2));
        EXPECT_EQ(env.state().door, 0.0);
    }
}

TEST(Door, DoorOpensOnlyWhileLatchReleased)
{
    std::mt19937_64 rng(7);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        DoorLatchEnv env(RewardMode::shaped);
        env.reset(seed);
        for (int t = 0; t < 100; ++t) {
            const double before = env.state().door;
            Vec a = uniform_action(rng, 2);
            a[0] = std::abs(a[0]);
            env.step(a);
            if (env.state().door > before)
                EXPECT_TRUE(env.latch_released());
        }
    }
}

TEST(Door, StopContactIsSuccess)
{
    DoorLatchEnv env(RewardMode::sparse);
    env.reset(0);
    auto s = env.state();
    s.door = s.door_stop;
    env.set_state(s);
    EXPECT_TRUE(env.oracle_success());
}

TEST(Hammer, DepthMonotoneAndSuccessAbsorbing)
{
    std::mt19937_64 rng(5);
    ScriptedExpert expert(EnvKind::hammer);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        HammerEnv env(RewardMode::shaped);
        Vec obs = env.reset(seed);
        bool succeeded = false;
        for (int t = 0; t < 150; ++t) {
            const double before = env.state().depth;
            Vec a = expert.act(obs) + 0.4 * uniform_action(rng, 3, 1.0);
            const StepResult r = env.step(a);
            obs = r.observation;
            EXPECT_GE(env.state().depth, before);
            EXPECT_LE(env.state().depth, env.params().nail_length);
            if (env.state().depth > before)
                EXPECT_TRUE(env.state().impact_this_step);
            if (succeeded)
                EXPECT_TRUE(r.success);
            succeeded = succeeded || r.success;
        }
    }
}

// Independent re-derivation of the grasped hammer's vertical motion and the
// nail impulse model, stepped alongside the environment.
TEST(Hammer, DepthMatchesImpulseOracle)
{
    ScriptedExpert expert(EnvKind::hammer);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        HammerEnv env(RewardMode::sparse);
        Vec obs = env.reset(seed);
        const HammerParams& p = env.params();
        double oracle_depth = 0.0;
        int impacts = 0;
        for (int t = 0; t < 100; ++t) {
            const Vec a = expert.act(obs);
            const auto s = env.state();
            bool oracle_impact = false;
            double increment = 0.0;
            if (s.grasped) {
                const double m = p.hand_mass + p.hammer_mass;
                const double ay = (p.servo_kp * (a[1] - s.hand.y()) - p.servo_kd * s.hand_vel.y()) / m - 0.1 * s.hand_vel.y();
                const double vy = s.hand_vel.y() + 0.02 * ay;
                const double y = s.hand.y() + 0.02 * vy;
                const double vx = s.hand_vel.x() + 0.02 * ((p.servo_kp * (a[0] - s.hand.x()) - p.servo_kd * s.hand_vel.x()) / m -
                                                           0.1 * s.hand_vel.x());
                const double x = s.hand.x() + 0.02 * vx;
                const double top = p.board_y + p.nail_length - oracle_depth;
                if (std::abs(x - s.nail_x) <= p.nail_tolerance && s.hand.y() - p.handle_length >= top &&
                    y - p.handle_length < top && vy < 0.0) {
                    oracle_impact = true;
                    increment = std::max(0.0, p.hammer_mass * -vy - 15.0 * 0.02) * p.depth_gain;
                }
            }
            const StepResult r = env.step(a);
            obs = r.observation;
            EXPECT_EQ(env.state().impact_this_step, oracle_impact) << "seed " << seed << " t " << t;
            if (oracle_impact) {
                ++impacts;
                oracle_depth = std::min(p.nail_length, oracle_depth + increment);
            }
            EXPECT_NEAR(env.state().depth, oracle_depth, 1e-12);
            if (r.done)
                break;
        }
        EXPECT_GE(impacts, 3);
        EXPECT_LE(impacts, 6);
        EXPECT_TRUE(env.oracle_success());
    }
}

TEST(Hammer, FrictionDefaultAndSubThresholdImpactDoesNothing)
{
    HammerEnv env(RewardMode::sparse);
    EXPECT_EQ(env.params().nail_friction, 15.0);
    env.reset(0);
    auto s = env.state();
    s.grasped = true;
    s.hand = Vec2(s.nail_x, env.nail_top() + env.params().handle_length + 0.001);
    s.hand_vel = Vec2(0.0, -0.2); // impulse 0.1 N*s < 15 N * 0.02 s
    s.hammer = s.hand;
    s.hammer_angle = -std::numbers::pi / 2.0;
    env.set_state(s);
    Vec a(3);
    a << s.nail_x, s.hand.y() - 0.05, 1.0;
    env.step(a);
    EXPECT_TRUE(env.state().impact_this_step);
    EXPECT_EQ(env.state().depth, 0.0);
}

TEST(AllEnvs, SparseRewardIsOracleIndicator)
{
    std::mt19937_64 rng(9);
    for (auto kind : all_kinds) {
        ScriptedExpert expert(kind);
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto [env, obs] = reset_env(kind, RewardMode::sparse, {}, seed);
            for (int t = 0; t < 100; ++t) {
                Vec a = expert.act(obs) + 0.2 * uniform_action(rng, expert.action_dim(), 1.0);
                const StepResult r = env->step(a);
                EXPECT_EQ(r.reward, env->oracle_success() ? 1.0 : 0.0);
                EXPECT_EQ(r.success, env->oracle_success());
                EXPECT_EQ(r.done, r.success);
                obs = r.observation;
                if (r.done)
                    break;
            }
        }
    }
}

TEST(AllEnvs, ShapedModeDoesNotTerminate)
{
    for (auto kind : all_kinds) {
        ScriptedExpert expert(kind);
        auto env = make_env(kind, RewardMode::shaped, {});
        const Trajectory t = rollout(*env, expert, 100, 1, true);
        EXPECT_EQ(t.size(), 100u);
        EXPECT_TRUE(t.success) << to_string(kind);
    }
}

TEST(AllEnvs, ObservationDimensionsMatchSpec)
{
    for (auto kind : all_kinds) {
        auto [env, obs] = reset_env(kind, RewardMode::sparse, {}, 0);
        EXPECT_EQ(obs.size(), env->spec().state_dim);
        EXPECT_EQ(env->spec().horizon, 100);
        EXPECT_TRUE(obs.allFinite());
    }
}

// Zero action with zero bias: kinetic energy never increases.
TEST(AllEnvs, PassiveEnergyNonIncreasing)
{
    {
        RelocateEnv env(RewardMode::shaped);
        env.reset(2);
        auto s = env.state();
        s.hand_vel = Vec2(1.5, -0.7);
        s.object_vel = Vec2(-2.0, 1.0);
        env.set_state(s);
        double prev = env.kinetic_energy();
        for (int t = 0; t < 300; ++t) {
            env.step(zeros(3));
            EXPECT_LE(env.kinetic_energy(), prev + 1e-12);
            prev = env.kinetic_energy();
        }
    }
    {
        PenOrientEnv env(RewardMode::shaped);
        env.reset(1);
        auto s = env.state();
        s.angular_vel = 4.0;
        env.set_state(s);
        double prev = env.kinetic_energy();
        for (int t = 0; t < 300; ++t) {
            env.step(zeros(2));
            EXPECT_LE(env.kinetic_energy(), prev + 1e-12);
            prev = env.kinetic_energy();
        }
    }
    {
        DoorLatchEnv env(RewardMode::shaped);
        env.mutable_params().door_bias = 0.0;
        env.mutable_params().latch_spring = 0.0;
        env.reset(1);
        auto s = env.state();
        s.latch = 1.0;
        s.latch_vel = 0.5;
        s.door = 0.5;
        s.door_vel = 1.0;
        env.set_state(s);
        double prev = env.kinetic_energy();
        for (int t = 0; t < 300; ++t) {
            env.step(zeros(2));
            EXPECT_LE(env.kinetic_energy(), prev + 1e-12);
            prev = env.kinetic_energy();
        }
    }
}

TEST(Ensemble, DegenerateRangeIsNominal)
{
    for (std::uint64_t s = 0; s < 100; ++s)
        EXPECT_EQ(sample_env_ensemble(EnsembleRanges{}, s), ObjectVariation{});
}

TEST(Ensemble, DrawsCoverRange)
{
    const EnsembleRanges r{0.5, 2.0, 0.7, 1.3};
    double mlo = 1e9, mhi = -1e9, slo = 1e9, shi = -1e9;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        const auto v = sample_env_ensemble(r, s);
        mlo = std::min(mlo, v.mass_scale);
        mhi = std::max(mhi, v.mass_scale);
        slo = std::min(slo, v.size_scale);
        shi = std::max(shi, v.size_scale);
    }
    EXPECT_GE(mlo, 0.5);
    EXPECT_LE(mhi, 2.0);
    EXPECT_LT(mlo, 0.5 + 0.02 * 1.5);
    EXPECT_GT(mhi, 2.0 - 0.02 * 1.5);
    EXPECT_LT(slo, 0.7 + 0.02 * 0.6);
    EXPECT_GT(shi, 1.3 - 0.02 * 0.6);
    EXPECT_THROW(sample_env_ensemble(EnsembleRanges{2.0, 1.0, 1.0, 1.0}, 0), ConfigError);
}

TEST(Ensemble, FactoryDrawsPerEpisode)
{
    EnvFactory f;
    f.kind = EnvKind::relocate;
    f.ensemble = EnsembleRanges{0.5, 2.0, 0.5, 2.0};
    auto a = f.make(1);
    auto b = f.make(2);
    EXPECT_NE(static_cast<RelocateEnv&>(*a).params().object_mass, static_cast<RelocateEnv&>(*b).params().object_mass);
}
