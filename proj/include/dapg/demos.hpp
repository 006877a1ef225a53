#ifndef DAPG_DEMOS_HPP
#define DAPG_DEMOS_HPP

#include "dapg/envs/registry.hpp"
#include "dapg/experts.hpp"
#include "dapg/mdp.hpp"
#include "dapg/policy.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dapg {

inline constexpr int demo_format_version = 1;

/// Identifies the task a demonstration set was recorded on.
struct EnvFingerprint {
    EnvKind kind = EnvKind::relocate;
    ObjectVariation variation{};
    int format_version = demo_format_version;

    bool operator==(const EnvFingerprint&) const = default;

    std::string describe() const
    {
        std::ostringstream os;
        os << to_string(kind) << "(mass_scale=" << variation.mass_scale << ", size_scale=" << variation.size_scale
           << ", v" << format_version << ")";
        return os.str();
    }
};

struct DemoDataset {
    std::vector<Trajectory> trajectories;
    EnvFingerprint fingerprint;
    double noise_amplitude = 0.0;

    std::size_t transition_count() const
    {
        std::size_t n = 0;
        for (const auto& t : trajectories)
            n += t.size();
        return n;
    }

    SampleBatch batch() const { return make_batch(trajectories); }

    /// Hard error unless the dataset was recorded on exactly this task.
    void require_compatible(const EnvFingerprint& expected) const
    {
        if (!(fingerprint == expected))
            throw DataError("demonstration fingerprint " + fingerprint.describe() + " does not match experiment " +
                            expected.describe());
    }
};

struct CollectStats {
    int attempts = 0;
    int successes = 0;
};

/// Rolls out the scripted expert with uniform actuator noise and keeps only
/// successful episodes (rejection sampling, capped at 50 n attempts).
inline DemoDataset collect_demos(EnvKind kind, const ObjectVariation& variation, int n, double noise_amplitude,
                                 std::uint64_t seed, int horizon = 100, CollectStats* stats = nullptr)
{
    if (n < 1)
        throw ConfigError("collect_demos: n must be >= 1");
    variation.validate();
    const ScriptedExpert expert(kind, noise_amplitude);
    DemoDataset ds;
    ds.fingerprint = EnvFingerprint{kind, variation, demo_format_version};
    ds.noise_amplitude = noise_amplitude;

    const int cap = 50 * n;
    int attempts = 0;
    while (static_cast<int>(ds.trajectories.size()) < n && attempts < cap) {
        const std::uint64_t s = derive_seed(seed, Stream::demos, static_cast<std::uint64_t>(attempts));
        auto env = make_env(kind, RewardMode::sparse, variation);
        Trajectory t = rollout(*env, expert, horizon, s, noise_amplitude == 0.0);
        ++attempts;
        if (t.success)
            ds.trajectories.push_back(std::move(t));
        if (attempts >= 20 && static_cast<double>(ds.trajectories.size()) < 0.1 * attempts)
            throw ConfigError("collect_demos: expert success rate under noise is below 10% (" +
                              std::to_string(ds.trajectories.size()) + "/" + std::to_string(attempts) +
                              " successful); check noise amplitude and task variation");
    }
    if (stats)
        *stats = CollectStats{attempts, static_cast<int>(ds.trajectories.size())};
    if (static_cast<int>(ds.trajectories.size()) < n)
        throw ConfigError("collect_demos: gave up after " + std::to_string(attempts) + " attempts with only " +
                          std::to_string(ds.trajectories.size()) + " successes");
    return ds;
}

/// Re-simulates a stored trajectory open loop from its reset seed. True when
/// every recorded state is reproduced exactly and the oracle fires.
inline bool replay_matches(const Trajectory& traj, const EnvFingerprint& fp)
{
    auto env = make_env(fp.kind, RewardMode::sparse, fp.variation);
    Vec obs = env->reset(traj.seed);
    bool success = false;
    for (const auto& tr : traj.transitions) {
        if (obs != tr.state)
            return false;
        StepResult r = env->step(tr.action);
        if (r.observation != tr.next_state)
            return false;
        success = success || r.success;
        obs = r.observation;
    }
    return success == traj.success && success;
}

// 64-bit FNV-1a over the body bytes.
inline std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Header record (fingerprint, counts, checksum) followed by JSONL trajectories.
inline std::string demos_to_string(const DemoDataset& ds)
{
    std::ostringstream body;
    for (const auto& t : ds.trajectories)
        write_trajectory_jsonl(body, t);
    const std::string b = body.str();

    nlohmann::json header;
    header["format"] = "dapg-demos";
    header["format_version"] = ds.fingerprint.format_version;
    header["env_kind"] = to_string(ds.fingerprint.kind);
    header["mass_scale"] = ds.fingerprint.variation.mass_scale;
    header["size_scale"] = ds.fingerprint.variation.size_scale;
    header["reward_mode"] = "sparse";
    header["noise_amplitude"] = ds.noise_amplitude;
    header["num_trajectories"] = ds.trajectories.size();
    header["num_transitions"] = ds.transition_count();
    header["body_bytes"] = b.size();
    header["checksum"] = hex64(fnv1a64(b));
    return header.dump() + "\n" + b;
}

inline DemoDataset demos_from_string(const std::string& text)
{
    const auto nl = text.find('\n');
    if (nl == std::string::npos)
        throw DataError("demo file has no header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text.substr(0, nl));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("demo header unreadable: ") + e.what());
    }
    if (header.value("format", "") != "dapg-demos")
        throw DataError("not a demonstration file");
    if (header.at("format_version").get<int>() != demo_format_version)
        throw DataError("unsupported demo format_version");
    const std::string_view body = std::string_view(text).substr(nl + 1);
    if (body.size() != header.at("body_bytes").get<std::size_t>() ||
        hex64(fnv1a64(body)) != header.at("checksum").get<std::string>())
        throw DataError("demo file checksum mismatch (truncated or corrupt)");

    DemoDataset ds;
    ds.fingerprint.kind = parse_env_kind(header.at("env_kind").get<std::string>());
    ds.fingerprint.variation.mass_scale = header.at("mass_scale").get<double>();
    ds.fingerprint.variation.size_scale = header.at("size_scale").get<double>();
    ds.fingerprint.format_version = header.at("format_version").get<int>();
    ds.noise_amplitude = header.at("noise_amplitude").get<double>();

    std::istringstream is{std::string(body)};
    const auto count = header.at("num_trajectories").get<std::size_t>();
    try {
        for (std::size_t i = 0; i < count; ++i)
            ds.trajectories.push_back(read_trajectory_jsonl(is));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("demo body unreadable: ") + e.what());
    }
    if (ds.transition_count() != header.at("num_transitions").get<std::size_t>())
        throw DataError("demo transition count mismatch");
    for (const auto& t : ds.trajectories)
        if (!t.success)
            throw DataError("demo file contains an unsuccessful trajectory");
    return ds;
}

inline void save_demos(const DemoDataset& ds, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw DataError("cannot write demos to " + path.string());
    os << demos_to_string(ds);
}

inline DemoDataset load_demos(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError("cannot read demos from " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return demos_from_string(ss.str());
}

inline DemoDataset load_demos(const std::filesystem::path& path, const EnvFingerprint& expected)
{
    DemoDataset ds = load_demos(path);
    ds.require_compatible(expected);
    return ds;
}

} // namespace dapg

#endif
