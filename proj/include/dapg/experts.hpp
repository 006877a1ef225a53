#ifndef DAPG_EXPERTS_HPP
#define DAPG_EXPERTS_HPP

#include "dapg/envs/registry.hpp"
#include "dapg/mdp.hpp"

#include <cmath>
#include <random>

namespace dapg {

/// Hand-written state-feedback controllers, one per task. They read only the
/// observation, so an expert is a stateless map and can be re-queried at any
/// recorded state.
class ScriptedExpert {
public:
    explicit ScriptedExpert(EnvKind kind, double noise_amplitude = 0.0) : kind_(kind), noise_(noise_amplitude)
    {
        if (noise_amplitude < 0.0)
            throw ConfigError("noise amplitude must be non-negative");
    }

    EnvKind kind() const { return kind_; }
    double noise_amplitude() const { return noise_; }

    int observation_dim() const
    {
        switch (kind_) {
        case EnvKind::relocate: return RelocateEnv::obs_dim;
        case EnvKind::pen: return PenOrientEnv::obs_dim;
        case EnvKind::door: return DoorLatchEnv::obs_dim;
        case EnvKind::hammer: return HammerEnv::obs_dim;
        }
        throw ConfigError("unsupported expert kind");
    }

    int action_dim() const
    {
        switch (kind_) {
        case EnvKind::relocate: return RelocateEnv::act_dim;
        case EnvKind::pen: return PenOrientEnv::act_dim;
        case EnvKind::door: return DoorLatchEnv::act_dim;
        case EnvKind::hammer: return HammerEnv::act_dim;
        }
        throw ConfigError("unsupported expert kind");
    }

    /// Noiseless command, already inside [-1, 1].
    Vec act(const Vec& obs) const
    {
        if (obs.size() != observation_dim())
            throw ConfigError("expert observation dimension mismatch");
        Vec a;
        switch (kind_) {
        case EnvKind::relocate: a = relocate(obs); break;
        case EnvKind::pen: a = pen(obs); break;
        case EnvKind::door: a = door(obs); break;
        case EnvKind::hammer: a = hammer(obs); break;
        }
        return a.cwiseMax(-1.0).cwiseMin(1.0);
    }

    /// Actuator noise is uniform in [-amplitude, amplitude] per channel and per
    /// step, added to the final command and then clipped to the action bounds.
    PolicySample sample(const Vec& obs, std::mt19937_64& rng, bool deterministic) const
    {
        Vec a = act(obs);
        if (!deterministic && noise_ > 0.0) {
            std::uniform_real_distribution<double> u(-noise_, noise_);
            for (Eigen::Index i = 0; i < a.size(); ++i)
                a[i] += u(rng);
            a = a.cwiseMax(-1.0).cwiseMin(1.0);
        }
        return {a, std::nullopt};
    }

private:
    static Vec relocate(const Vec& o)
    {
        const bool grasped = o[10] > 0.5;
        const Vec2 to_object = o.segment<2>(11);
        const Vec2 to_target = o.segment<2>(13);
        // Servo targets lead the hand by a bounded "carrot" so the carry stays
        // well below the grip's slip limit.
        const Vec2 u = grasped ? clip_norm(to_target, 0.3) : clip_norm(to_object, 0.35);
        Vec a(3);
        a << u / RelocateParams{}.command_scale, 1.0;
        return a;
    }

    static Vec pen(const Vec& o)
    {
        const double err = std::atan2(o[5], o[6]);
        const double omega = o[2];
        const double torque = 3.0 * err - 0.6 * omega;
        Vec a(2);
        a << torque / 1.5, torque / 1.5;
        return a;
    }

    static Vec door(const Vec& o)
    {
        const DoorParams p;
        const bool released = o[0] > p.latch_release;
        Vec a(2);
        a << 1.0, released ? 1.0 : 0.0;
        return a;
    }

    static Vec hammer(const Vec& o)
    {
        const HammerParams p;
        const Vec2 hand = o.segment<2>(0);
        const Vec2 hand_vel = o.segment<2>(2);
        const Vec2 hammer_pos = o.segment<2>(4);
        const bool grasped = o[8] > 0.5;
        const double nail_x = o[9];
        const double nail_top = o[10];
        const Vec2 head = o.segment<2>(12);
        Vec a(3);
        if (!grasped) {
            a << hand + clip_norm(hammer_pos - hand, 0.5), 1.0;
            return a;
        }
        const double handle = hand.y() - head.y();
        const double clearance = head.y() - nail_top;
        const bool aligned = std::abs(head.x() - nail_x) <= 0.5 * p.nail_tolerance;
        const bool descending = hand_vel.y() < -0.05;
        // Swing down once the head is high enough, keep swinging while it falls.
        double ty = nail_top + handle + 0.45;
        if (aligned && (clearance >= 0.22 || (descending && clearance > 0.0)))
            ty = nail_top + handle - 0.5;
        a << nail_x, ty, 1.0;
        return a;
    }

    EnvKind kind_;
    double noise_;
};

} // namespace dapg

#endif
