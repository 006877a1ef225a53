#ifndef DAPG_MDP_HPP
#define DAPG_MDP_HPP

#include "dapg/common.hpp"

#include <json.hpp>

#include <concepts>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace dapg {

enum class RewardMode { sparse, shaped };

inline std::string to_string(RewardMode m) { return m == RewardMode::sparse ? "sparse" : "shaped"; }

inline RewardMode parse_reward_mode(const std::string& s)
{
    if (s == "sparse")
        return RewardMode::sparse;
    if (s == "shaped")
        return RewardMode::shaped;
    throw ConfigError("unknown reward mode '" + s + "'");
}

struct EnvSpec {
    int state_dim = 0;
    int action_dim = 0;
    Vec action_low;
    Vec action_high;
    int horizon = 100;
    double discount = 0.995;
    RewardMode reward_mode = RewardMode::sparse;

    void validate() const
    {
        if (state_dim <= 0 || action_dim <= 0)
            throw ConfigError("EnvSpec: dimensions must be positive");
        if (action_low.size() != action_dim || action_high.size() != action_dim)
            throw ConfigError("EnvSpec: action bounds do not match action_dim");
        for (int i = 0; i < action_dim; ++i)
            if (!(action_low[i] < action_high[i]))
                throw ConfigError("EnvSpec: action_low must be < action_high");
        if (horizon <= 0)
            throw ConfigError("EnvSpec: horizon must be positive");
        if (!(discount >= 0.0 && discount < 1.0))
            throw ConfigError("EnvSpec: discount must lie in [0,1)");
    }
};

struct Transition {
    Vec state;
    Vec action;
    Vec next_state;
    double reward = 0.0;
    // Empty for demonstrations, which carry no policy density.
    std::optional<double> log_prob;
    bool done = false;
};

struct Trajectory {
    std::vector<Transition> transitions;
    bool success = false;
    std::uint64_t seed = 0;

    std::size_t size() const { return transitions.size(); }
    bool empty() const { return transitions.empty(); }
};

struct StepResult {
    Vec observation;
    double reward = 0.0;
    bool done = false;
    bool success = false;
};

/// Deterministic simulated task. Subclasses implement the dynamics; the base
/// class owns action clipping and the sparse/shaped reward convention.
class Environment {
public:
    virtual ~Environment() = default;

    const EnvSpec& spec() const { return spec_; }

    /// Draws the initial state from the task's start distribution.
    virtual Vec reset(std::uint64_t seed) = 0;
    virtual Vec observation() const = 0;
    virtual bool oracle_success() const = 0;
    virtual std::string name() const = 0;

    StepResult step(const Vec& action)
    {
        Vec a = clip_action(action);
        advance(a);
        StepResult out;
        out.observation = observation();
        out.success = oracle_success();
        if (spec_.reward_mode == RewardMode::sparse) {
            out.reward = out.success ? 1.0 : 0.0;
            out.done = out.success;
        } else {
            out.reward = shaped_reward();
        }
        return out;
    }

    Vec clip_action(const Vec& action) const
    {
        if (action.size() != spec_.action_dim)
            throw ConfigError("action dimension mismatch for " + name());
        if (!action.allFinite())
            throw InputError("non-finite action passed to " + name());
        return action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
    }

protected:
    explicit Environment(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    virtual void advance(const Vec& clipped_action) = 0;
    virtual double shaped_reward() const = 0;

    EnvSpec spec_;
};

struct PolicySample {
    Vec action;
    std::optional<double> log_prob;
};

/// Anything that maps observations to (possibly stochastic) actions.
template <class P>
concept ActionSource = requires(const P& p, const Vec& obs, std::mt19937_64& rng, bool deterministic) {
    { p.observation_dim() } -> std::convertible_to<int>;
    { p.action_dim() } -> std::convertible_to<int>;
    { p.sample(obs, rng, deterministic) } -> std::same_as<PolicySample>;
};

/// Runs one episode. The environment is reset with `seed`; policy noise comes
/// from an independent stream derived from the same seed.
template <ActionSource Policy>
Trajectory rollout(Environment& env, const Policy& policy, int horizon, std::uint64_t seed, bool deterministic)
{
    const EnvSpec& spec = env.spec();
    if (policy.observation_dim() != spec.state_dim || policy.action_dim() != spec.action_dim)
        throw ConfigError("policy dimensions do not match environment " + env.name());
    if (horizon <= 0)
        throw ConfigError("rollout horizon must be positive");

    std::mt19937_64 rng(derive_seed(seed, Stream::action_noise));
    Trajectory traj;
    traj.seed = seed;
    traj.transitions.reserve(static_cast<std::size_t>(horizon));
    Vec obs = env.reset(seed);
    for (int t = 0; t < horizon; ++t) {
        PolicySample s = policy.sample(obs, rng, deterministic);
        StepResult r = env.step(s.action);
        traj.success = traj.success || r.success;
        traj.transitions.push_back(Transition{obs, std::move(s.action), r.observation, r.reward, s.log_prob, r.done});
        obs = std::move(r.observation);
        if (r.done)
            break;
    }
    return traj;
}

inline double discounted_return(const Trajectory& traj, double discount)
{
    double total = 0.0;
    double scale = 1.0;
    for (const Transition& tr : traj.transitions) {
        total += scale * tr.reward;
        scale *= discount;
    }
    return total;
}

inline double undiscounted_return(const Trajectory& traj)
{
    double total = 0.0;
    for (const Transition& tr : traj.transitions)
        total += tr.reward;
    return total;
}

// ---- JSONL serialization ---------------------------------------------------

inline constexpr int trajectory_format_version = 1;

inline nlohmann::json vec_to_json(const Vec& v)
{
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vec vec_from_json(const nlohmann::json& j)
{
    auto xs = j.get<std::vector<double>>();
    return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

inline nlohmann::json transition_to_json(const Transition& tr)
{
    nlohmann::json j;
    j["s"] = vec_to_json(tr.state);
    j["a"] = vec_to_json(tr.action);
    j["s_next"] = vec_to_json(tr.next_state);
    j["r"] = tr.reward;
    j["log_prob"] = tr.log_prob ? nlohmann::json(*tr.log_prob) : nlohmann::json(nullptr);
    j["done"] = tr.done;
    return j;
}

inline Transition transition_from_json(const nlohmann::json& j)
{
    Transition tr;
    tr.state = vec_from_json(j.at("s"));
    tr.action = vec_from_json(j.at("a"));
    tr.next_state = vec_from_json(j.at("s_next"));
    tr.reward = j.at("r").get<double>();
    if (!j.at("log_prob").is_null())
        tr.log_prob = j.at("log_prob").get<double>();
    tr.done = j.at("done").get<bool>();
    return tr;
}

/// Header record followed by one transition per line.
inline void write_trajectory_jsonl(std::ostream& os, const Trajectory& traj)
{
    nlohmann::json header;
    header["format_version"] = trajectory_format_version;
    header["state_dim"] = traj.empty() ? 0 : traj.transitions.front().state.size();
    header["action_dim"] = traj.empty() ? 0 : traj.transitions.front().action.size();
    header["seed"] = traj.seed;
    header["success"] = traj.success;
    header["length"] = traj.size();
    os << header.dump() << '\n';
    for (const Transition& tr : traj.transitions)
        os << transition_to_json(tr).dump() << '\n';
}

inline Trajectory read_trajectory_jsonl(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw DataError("trajectory stream is empty");
    auto header = nlohmann::json::parse(line);
    if (header.at("format_version").get<int>() != trajectory_format_version)
        throw DataError("unsupported trajectory format_version");
    Trajectory traj;
    traj.seed = header.at("seed").get<std::uint64_t>();
    traj.success = header.at("success").get<bool>();
    const auto length = header.at("length").get<std::size_t>();
    const auto sdim = header.at("state_dim").get<Eigen::Index>();
    const auto adim = header.at("action_dim").get<Eigen::Index>();
    for (std::size_t i = 0; i < length; ++i) {
        if (!std::getline(is, line))
            throw DataError("trajectory stream truncated");
        Transition tr = transition_from_json(nlohmann::json::parse(line));
        if (tr.state.size() != sdim || tr.next_state.size() != sdim || tr.action.size() != adim)
            throw DataError("transition dimensions disagree with header");
        traj.transitions.push_back(std::move(tr));
    }
    return traj;
}

} // namespace dapg

#endif
