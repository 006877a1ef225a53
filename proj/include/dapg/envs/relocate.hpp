#ifndef DAPG_ENVS_RELOCATE_HPP
#define DAPG_ENVS_RELOCATE_HPP

#include "dapg/envs/variation.hpp"
#include "dapg/mdp.hpp"

#include <random>

namespace dapg {

/// Planar reach-grasp-carry task. Actions are a hand position target (PD servo)
/// and a grasp channel that holds the object while positive.
struct RelocateParams {
    double hand_mass = 1.0;
    double servo_kp = 40.0;
    double servo_kd = 9.0;
    // Servo target offset from the hand per unit action.
    double command_scale = 0.5;
    double object_mass = 1.0;
    double object_radius = 0.05;
    double finger_clearance = 0.04;
    double success_epsilon = 0.05;
    // Largest inertial force the grip can transmit before the object slips out.
    double grip_capacity = 12.0;
    double table_friction = 4.0;
    double spawn_half_width = 0.6;
    double min_object_target_distance = 0.4;
    double min_object_hand_distance = 0.3;
};

class RelocateEnv : public Environment {
public:
    static constexpr int obs_dim = 15;
    static constexpr int act_dim = 3;

    struct State {
        Vec2 hand = Vec2::Zero();
        Vec2 hand_vel = Vec2::Zero();
        Vec2 object = Vec2::Zero();
        Vec2 object_vel = Vec2::Zero();
        Vec2 target = Vec2::Zero();
        Vec2 grasp_offset = Vec2::Zero();
        bool grasped = false;
    };

    RelocateEnv(RewardMode mode, ObjectVariation variation = {}, RelocateParams params = {})
        : Environment(make_spec(mode)), base_(params), params_(params), variation_(variation)
    {
        variation_.validate();
        params_.object_mass = base_.object_mass * variation_.mass_scale;
        params_.object_radius = base_.object_radius * variation_.size_scale;
    }

    std::string name() const override { return "relocate"; }

    Vec reset(std::uint64_t seed) override
    {
        std::mt19937_64 rng(derive_seed(seed, Stream::env_reset));
        std::uniform_real_distribution<double> u(-params_.spawn_half_width, params_.spawn_half_width);
        state_ = State{};
        do {
            state_.object = Vec2(u(rng), u(rng));
            state_.target = Vec2(u(rng), u(rng));
        } while ((state_.object - state_.target).norm() < params_.min_object_target_distance ||
                 (state_.object - state_.hand).norm() < params_.min_object_hand_distance);
        return observation();
    }

    Vec observation() const override
    {
        Vec o(obs_dim);
        o << state_.hand, state_.hand_vel, state_.object, state_.object_vel, state_.target,
            state_.grasped ? 1.0 : 0.0, state_.object - state_.hand, state_.target - state_.object;
        return o;
    }

    bool oracle_success() const override
    {
        return (state_.object - state_.target).norm() <= params_.success_epsilon;
    }

    double grasp_radius() const { return params_.finger_clearance + params_.object_radius; }
    const RelocateParams& params() const { return params_; }
    const ObjectVariation& variation() const { return variation_; }
    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

    double kinetic_energy() const
    {
        const double hand_m = params_.hand_mass;
        return 0.5 * hand_m * state_.hand_vel.squaredNorm() + 0.5 * params_.object_mass * state_.object_vel.squaredNorm();
    }

protected:
    void advance(const Vec& a) override
    {
        const double dt = control_dt;
        const Vec2 servo_target = state_.hand + params_.command_scale * Vec2(a[0], a[1]);
        const bool grip = a[2] > 0.0;
        if (!grip)
            state_.grasped = false;

        auto hand_accel = [&](bool carrying) {
            const double m = params_.hand_mass + (carrying ? params_.object_mass : 0.0);
            return Vec2((params_.servo_kp * (servo_target - state_.hand) - params_.servo_kd * state_.hand_vel) / m -
                        viscous_damping * state_.hand_vel);
        };

        Vec2 acc = hand_accel(state_.grasped);
        if (state_.grasped && params_.object_mass * acc.norm() > params_.grip_capacity) {
            state_.grasped = false;
            acc = hand_accel(false);
        }

        state_.hand_vel += dt * acc;
        state_.hand += dt * state_.hand_vel;
        clamp_to_workspace(state_.hand, state_.hand_vel);

        if (state_.grasped) {
            state_.object = state_.hand + state_.grasp_offset;
            state_.object_vel = state_.hand_vel;
            clamp_to_workspace(state_.object, state_.object_vel);
        } else {
            state_.object_vel -= dt * (params_.table_friction + viscous_damping) * state_.object_vel;
            state_.object += dt * state_.object_vel;
            clamp_to_workspace(state_.object, state_.object_vel);
            if (grip && (state_.hand - state_.object).norm() <= grasp_radius()) {
                state_.grasped = true;
                state_.grasp_offset = state_.object - state_.hand;
                state_.object_vel = state_.hand_vel;
            }
        }
    }

    double shaped_reward() const override
    {
        return -(state_.hand - state_.object).norm() - 2.0 * (state_.object - state_.target).norm() +
               (oracle_success() ? 10.0 : 0.0);
    }

private:
    static EnvSpec make_spec(RewardMode mode)
    {
        EnvSpec s;
        s.state_dim = obs_dim;
        s.action_dim = act_dim;
        s.action_low = Vec::Constant(act_dim, -1.0);
        s.action_high = Vec::Constant(act_dim, 1.0);
        s.reward_mode = mode;
        return s;
    }

    RelocateParams base_;
    RelocateParams params_;
    ObjectVariation variation_;
    State state_;
};

} // namespace dapg

#endif
