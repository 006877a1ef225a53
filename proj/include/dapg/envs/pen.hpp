#ifndef DAPG_ENVS_PEN_HPP
#define DAPG_ENVS_PEN_HPP

#include "dapg/envs/variation.hpp"
#include "dapg/mdp.hpp"

#include <numbers>
#include <random>

namespace dapg {

/// In-hand reorientation of a pen about one axis. Two fingertip channels apply
/// torque through fixed gains.
struct PenParams {
    double inertia = 0.1;
    double finger_gain_0 = 1.0;
    double finger_gain_1 = 0.5;
    double contact_damping = 0.3;
    double tolerance = 0.1;
    double initial_spread = 0.2;
};

class PenOrientEnv : public Environment {
public:
    static constexpr int obs_dim = 7;
    static constexpr int act_dim = 2;

    struct State {
        double angle = 0.0;
        double angular_vel = 0.0;
        double target = 0.0;
    };

    PenOrientEnv(RewardMode mode, ObjectVariation variation = {}, PenParams params = {})
        : Environment(make_spec(mode)), params_(params), variation_(variation)
    {
        variation_.validate();
        // I ~ m L^2
        params_.inertia = params.inertia * variation_.mass_scale * variation_.size_scale * variation_.size_scale;
    }

    std::string name() const override { return "pen"; }

    Vec reset(std::uint64_t seed) override
    {
        std::mt19937_64 rng(derive_seed(seed, Stream::env_reset));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        state_ = State{};
        state_.angle = params_.initial_spread * (2.0 * u(rng) - 1.0);
        // u in [0,1) maps onto (-pi, pi]
        state_.target = std::numbers::pi - 2.0 * std::numbers::pi * u(rng);
        return observation();
    }

    Vec observation() const override
    {
        const double err = state_.target - state_.angle;
        Vec o(obs_dim);
        o << std::cos(state_.angle), std::sin(state_.angle), state_.angular_vel, std::cos(state_.target),
            std::sin(state_.target), std::sin(err), std::cos(err);
        return o;
    }

    double orientation_error() const { return wrap_angle(state_.angle - state_.target); }

    bool oracle_success() const override { return std::abs(orientation_error()) <= params_.tolerance; }

    const PenParams& params() const { return params_; }
    const State& state() const { return state_; }
    void set_state(const State& s) { state_ = s; }
    double kinetic_energy() const { return 0.5 * params_.inertia * state_.angular_vel * state_.angular_vel; }

protected:
    void advance(const Vec& a) override
    {
        const double torque = params_.finger_gain_0 * a[0] + params_.finger_gain_1 * a[1];
        const double acc = (torque - params_.contact_damping * state_.angular_vel) / params_.inertia -
                           viscous_damping * state_.angular_vel;
        state_.angular_vel += control_dt * acc;
        state_.angle = wrap_angle(state_.angle + control_dt * state_.angular_vel);
    }

    double shaped_reward() const override
    {
        return -std::abs(orientation_error()) + (oracle_success() ? 5.0 : 0.0);
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

    PenParams params_;
    ObjectVariation variation_;
    State state_;
};

} // namespace dapg

#endif
