#ifndef DAPG_ENVS_HAMMER_HPP
#define DAPG_ENVS_HAMMER_HPP

#include "dapg/envs/variation.hpp"
#include "dapg/mdp.hpp"

#include <algorithm>
#include <numbers>
#include <random>

namespace dapg {

/// Pick up a hammer and drive a nail into a board. The nail only advances when
/// the impact impulse of the head exceeds what the nail friction absorbs in
/// one control step.
struct HammerParams {
    double hand_mass = 1.0;
    double servo_kp = 150.0;
    double servo_kd = 22.0;
    double hammer_mass = 0.5;
    double handle_length = 0.15;
    double grasp_radius = 0.08;
    double board_y = -0.6;
    double nail_length = 0.1;
    double nail_friction = 15.0;
    // metres of nail travel per N*s of excess impulse
    double depth_gain = 0.025;
    double nail_tolerance = 0.04;
    double restitution = 0.2;
};

class HammerEnv : public Environment {
public:
    static constexpr int obs_dim = 14;
    static constexpr int act_dim = 3;

    struct State {
        Vec2 hand = Vec2::Zero();
        Vec2 hand_vel = Vec2::Zero();
        Vec2 hammer = Vec2::Zero();
        double hammer_angle = 0.0;
        bool grasped = false;
        double nail_x = 0.0;
        double depth = 0.0;
        int impacts = 0;
        // Head impulse of an impact during the last step (N*s); zero otherwise.
        double last_impulse = 0.0;
        bool impact_this_step = false;
    };

    HammerEnv(RewardMode mode, ObjectVariation variation = {}, HammerParams params = {})
        : Environment(make_spec(mode)), params_(params), variation_(variation)
    {
        variation_.validate();
        params_.hammer_mass = params.hammer_mass * variation_.mass_scale;
        params_.handle_length = params.handle_length * variation_.size_scale;
    }

    std::string name() const override { return "hammer"; }

    Vec reset(std::uint64_t seed) override
    {
        std::mt19937_64 rng(derive_seed(seed, Stream::env_reset));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        state_ = State{};
        state_.hammer = Vec2(-0.6 + 1.2 * u(rng), 0.2 + 0.4 * u(rng));
        state_.hammer_angle = std::numbers::pi - 2.0 * std::numbers::pi * u(rng);
        state_.nail_x = -0.5 + u(rng);
        return observation();
    }

    Vec2 head() const
    {
        return state_.hammer + params_.handle_length * Vec2(std::cos(state_.hammer_angle), std::sin(state_.hammer_angle));
    }

    double nail_top() const { return params_.board_y + params_.nail_length - state_.depth; }

    Vec observation() const override
    {
        const Vec2 h = head();
        Vec o(obs_dim);
        o << state_.hand, state_.hand_vel, state_.hammer, std::cos(state_.hammer_angle), std::sin(state_.hammer_angle),
            state_.grasped ? 1.0 : 0.0, state_.nail_x, nail_top(), state_.depth / params_.nail_length, h;
        return o;
    }

    bool oracle_success() const override { return state_.depth >= params_.nail_length; }

    const HammerParams& params() const { return params_; }
    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

    double kinetic_energy() const
    {
        const double m = params_.hand_mass + (state_.grasped ? params_.hammer_mass : 0.0);
        return 0.5 * m * state_.hand_vel.squaredNorm();
    }

protected:
    void advance(const Vec& a) override
    {
        const double dt = control_dt;
        const Vec2 servo_target(a[0], a[1]);
        const bool grip = a[2] > 0.0;
        state_.impact_this_step = false;
        state_.last_impulse = 0.0;
        if (!grip && state_.grasped)
            state_.grasped = false;

        const double m = params_.hand_mass + (state_.grasped ? params_.hammer_mass : 0.0);
        const Vec2 acc = (params_.servo_kp * (servo_target - state_.hand) - params_.servo_kd * state_.hand_vel) / m -
                         viscous_damping * state_.hand_vel;
        const double prev_hand_y = state_.hand.y();
        state_.hand_vel += dt * acc;
        state_.hand += dt * state_.hand_vel;
        clamp_to_workspace(state_.hand, state_.hand_vel);

        if (state_.grasped) {
            const double L = params_.handle_length;
            const double top = nail_top();
            const double head_prev_y = prev_hand_y - L;
            const double head_y = state_.hand.y() - L;
            const bool over_nail = std::abs(state_.hand.x() - state_.nail_x) <= params_.nail_tolerance;
            if (over_nail && head_prev_y >= top && head_y < top && state_.hand_vel.y() < 0.0) {
                const double impulse = params_.hammer_mass * -state_.hand_vel.y();
                const double advance_by =
                    std::max(0.0, impulse - params_.nail_friction * dt) * params_.depth_gain;
                state_.depth = std::min(params_.nail_length, state_.depth + advance_by);
                state_.impacts += 1;
                state_.last_impulse = impulse;
                state_.impact_this_step = true;
                state_.hand.y() = nail_top() + L;
                state_.hand_vel.y() = params_.restitution * -state_.hand_vel.y();
            } else if (head_y < params_.board_y) {
                state_.hand.y() = params_.board_y + L;
                state_.hand_vel.y() = std::max(state_.hand_vel.y(), 0.0);
            }
            state_.hammer = state_.hand;
        } else if (grip && (state_.hand - state_.hammer).norm() <= params_.grasp_radius) {
            state_.grasped = true;
            state_.hammer = state_.hand;
            state_.hammer_angle = -std::numbers::pi / 2.0;
        }
    }

    double shaped_reward() const override
    {
        const double g = state_.grasped ? 1.0 : 0.0;
        const Vec2 nail(state_.nail_x, nail_top());
        return -(state_.hand - state_.hammer).norm() * (1.0 - g) - (head() - nail).norm() * g +
               5.0 * state_.depth / params_.nail_length + (oracle_success() ? 10.0 : 0.0);
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

    HammerParams params_;
    ObjectVariation variation_;
    State state_;
};

} // namespace dapg

#endif
