#ifndef DAPG_ENVS_DOOR_HPP
#define DAPG_ENVS_DOOR_HPP

#include "dapg/envs/variation.hpp"
#include "dapg/mdp.hpp"

#include <algorithm>
#include <random>

namespace dapg {

/// Latched door. The latch has dry friction and a return spring; the door can
/// only swing open while the latch is past its release angle, and a bias torque
/// pulls it shut. Latch friction is hidden from the observation.
struct DoorParams {
    double latch_inertia = 0.05;
    double latch_gain = 1.0;
    double latch_spring = 0.5;
    double latch_friction_low = 0.2;
    double latch_friction_high = 0.5;
    double latch_release = 0.8;
    double latch_max = 1.2;
    double door_inertia = 0.3;
    double door_gain = 1.0;
    double door_bias = 0.3;
    double hinge_damping = 0.2;
    double stop_low = 1.0;
    double stop_high = 1.4;
};

class DoorLatchEnv : public Environment {
public:
    static constexpr int obs_dim = 6;
    static constexpr int act_dim = 2;

    struct State {
        double latch = 0.0;
        double latch_vel = 0.0;
        double door = 0.0;
        double door_vel = 0.0;
        double door_stop = 1.2;
        double latch_friction = 0.35;
    };

    DoorLatchEnv(RewardMode mode, ObjectVariation variation = {}, DoorParams params = {})
        : Environment(make_spec(mode)), params_(params), variation_(variation)
    {
        variation_.validate();
        params_.door_inertia = params.door_inertia * variation_.mass_scale * variation_.size_scale * variation_.size_scale;
    }

    std::string name() const override { return "door"; }

    Vec reset(std::uint64_t seed) override
    {
        std::mt19937_64 rng(derive_seed(seed, Stream::env_reset));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        state_ = State{};
        state_.door_stop = params_.stop_low + (params_.stop_high - params_.stop_low) * u(rng);
        state_.latch_friction =
            params_.latch_friction_low + (params_.latch_friction_high - params_.latch_friction_low) * u(rng);
        return observation();
    }

    Vec observation() const override
    {
        Vec o(obs_dim);
        o << state_.latch, state_.latch_vel, state_.door, state_.door_vel, state_.door_stop,
            state_.door_stop - state_.door;
        return o;
    }

    bool oracle_success() const override { return state_.door >= state_.door_stop; }
    bool latch_released() const { return state_.latch > params_.latch_release; }

    const DoorParams& params() const { return params_; }
    DoorParams& mutable_params() { return params_; }
    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }

    double kinetic_energy() const
    {
        return 0.5 * params_.latch_inertia * state_.latch_vel * state_.latch_vel +
               0.5 * params_.door_inertia * state_.door_vel * state_.door_vel;
    }

protected:
    void advance(const Vec& a) override
    {
        const double dt = control_dt;

        // Latch: Coulomb friction with stiction.
        const double drive = params_.latch_gain * a[0] - params_.latch_spring * state_.latch;
        if (state_.latch_vel == 0.0 && std::abs(drive) <= state_.latch_friction) {
            // stuck
        } else {
            const double dir = state_.latch_vel != 0.0 ? (state_.latch_vel > 0 ? 1.0 : -1.0) : (drive > 0 ? 1.0 : -1.0);
            const double acc = (drive - dir * state_.latch_friction) / params_.latch_inertia - viscous_damping * state_.latch_vel;
            double v = state_.latch_vel + dt * acc;
            if (v * dir < 0.0)
                v = 0.0;
            state_.latch_vel = v;
        }
        state_.latch += dt * state_.latch_vel;
        if (state_.latch <= 0.0) {
            state_.latch = 0.0;
            state_.latch_vel = std::max(state_.latch_vel, 0.0);
        } else if (state_.latch >= params_.latch_max) {
            state_.latch = params_.latch_max;
            state_.latch_vel = std::min(state_.latch_vel, 0.0);
        }

        // Door.
        const double torque = params_.door_gain * a[1] - params_.door_bias;
        const double acc =
            (torque - params_.hinge_damping * state_.door_vel) / params_.door_inertia - viscous_damping * state_.door_vel;
        state_.door_vel += dt * acc;
        if (!latch_released() && state_.door_vel > 0.0)
            state_.door_vel = 0.0;
        state_.door += dt * state_.door_vel;
        if (state_.door <= 0.0) {
            state_.door = 0.0;
            state_.door_vel = std::max(state_.door_vel, 0.0);
        } else if (state_.door >= state_.door_stop) {
            state_.door = state_.door_stop;
            state_.door_vel = std::min(state_.door_vel, 0.0);
        }
    }

    double shaped_reward() const override
    {
        const double latch_progress = std::clamp(state_.latch / params_.latch_release, 0.0, 1.0);
        return 2.0 * latch_progress + state_.door + (oracle_success() ? 10.0 : 0.0);
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

    DoorParams params_;
    ObjectVariation variation_;
    State state_;
};

} // namespace dapg

#endif
