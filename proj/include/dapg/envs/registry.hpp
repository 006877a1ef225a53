#ifndef DAPG_ENVS_REGISTRY_HPP
#define DAPG_ENVS_REGISTRY_HPP

#include "dapg/envs/door.hpp"
#include "dapg/envs/hammer.hpp"
#include "dapg/envs/pen.hpp"
#include "dapg/envs/relocate.hpp"
#include "dapg/envs/variation.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

namespace dapg {

enum class EnvKind { relocate, pen, door, hammer };

inline std::string to_string(EnvKind k)
{
    switch (k) {
    case EnvKind::relocate: return "relocate";
    case EnvKind::pen: return "pen";
    case EnvKind::door: return "door";
    case EnvKind::hammer: return "hammer";
    }
    return "unknown";
}

inline EnvKind parse_env_kind(const std::string& s)
{
    if (s == "relocate")
        return EnvKind::relocate;
    if (s == "pen")
        return EnvKind::pen;
    if (s == "door")
        return EnvKind::door;
    if (s == "hammer")
        return EnvKind::hammer;
    throw ConfigError("unknown env kind '" + s + "'");
}

inline std::unique_ptr<Environment> make_env(EnvKind kind, RewardMode mode, const ObjectVariation& variation = {})
{
    switch (kind) {
    case EnvKind::relocate: return std::make_unique<RelocateEnv>(mode, variation);
    case EnvKind::pen: return std::make_unique<PenOrientEnv>(mode, variation);
    case EnvKind::door: return std::make_unique<DoorLatchEnv>(mode, variation);
    case EnvKind::hammer: return std::make_unique<HammerEnv>(mode, variation);
    }
    throw ConfigError("unknown env kind");
}

inline std::unique_ptr<Environment> make_env(const std::string& kind, RewardMode mode, const ObjectVariation& variation = {})
{
    return make_env(parse_env_kind(kind), mode, variation);
}

/// Constructs a fresh environment and draws its initial state.
inline std::pair<std::unique_ptr<Environment>, Vec> reset_env(EnvKind kind, RewardMode mode,
                                                              const ObjectVariation& variation, std::uint64_t seed)
{
    auto env = make_env(kind, mode, variation);
    Vec obs = env->reset(seed);
    return {std::move(env), std::move(obs)};
}

inline std::pair<std::unique_ptr<Environment>, Vec> reset_env(const std::string& kind, RewardMode mode,
                                                              const ObjectVariation& variation, std::uint64_t seed)
{
    return reset_env(parse_env_kind(kind), mode, variation, seed);
}

/// Builds one environment per episode. In ensemble mode each episode draws its
/// own variation from a stream derived from the episode seed.
struct EnvFactory {
    EnvKind kind = EnvKind::relocate;
    RewardMode reward_mode = RewardMode::sparse;
    ObjectVariation variation{};
    std::optional<EnsembleRanges> ensemble;
    int horizon = 100;
    // Overrides `kind` when set, e.g. for environments defined outside the registry.
    std::function<std::unique_ptr<Environment>(RewardMode, const ObjectVariation&)> custom;

    std::unique_ptr<Environment> build(const ObjectVariation& v) const
    {
        return custom ? custom(reward_mode, v) : make_env(kind, reward_mode, v);
    }

    std::unique_ptr<Environment> make(std::uint64_t episode_seed) const
    {
        if (ensemble)
            return build(sample_env_ensemble(*ensemble, episode_seed));
        return build(variation);
    }

    EnvSpec spec() const
    {
        EnvSpec s = build(variation)->spec();
        s.horizon = horizon;
        return s;
    }
};

} // namespace dapg

#endif
