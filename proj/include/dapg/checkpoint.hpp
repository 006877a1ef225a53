#ifndef DAPG_CHECKPOINT_HPP
#define DAPG_CHECKPOINT_HPP

#include "dapg/policy.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace dapg {

inline constexpr int checkpoint_format_version = 1;

// Line 1: manifest header. Line 2: the flat parameter array. Doubles are
// written in shortest round-trip form, so load(save(p)) is bit-exact.
inline std::string checkpoint_to_string(const GaussianMlpPolicy& policy)
{
    const MlpManifest& m = policy.manifest();
    nlohmann::json header;
    header["format"] = "dapg-policy";
    header["format_version"] = checkpoint_format_version;
    header["input_dim"] = m.input_dim;
    header["hidden"] = m.hidden;
    header["output_dim"] = m.output_dim;
    header["activation"] = m.activation;
    header["param_count"] = policy.param_count();
    header["logstd_offset"] = m.logstd_offset();
    std::ostringstream os;
    os << header.dump() << '\n' << vec_to_json(policy.params()).dump() << '\n';
    return os.str();
}

inline GaussianMlpPolicy checkpoint_from_string(const std::string& text)
{
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line))
        throw DataError("checkpoint is empty");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header unreadable: ") + e.what());
    }
    if (header.value("format", "") != "dapg-policy")
        throw DataError("not a policy checkpoint");
    if (header.at("format_version").get<int>() != checkpoint_format_version)
        throw DataError("unsupported checkpoint format_version");
    MlpManifest m;
    m.input_dim = header.at("input_dim").get<int>();
    m.hidden = header.at("hidden").get<std::vector<int>>();
    m.output_dim = header.at("output_dim").get<int>();
    m.activation = header.at("activation").get<std::string>();
    if (!std::getline(is, line))
        throw DataError("checkpoint parameter line missing");
    Vec flat;
    try {
        flat = vec_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint parameters unreadable: ") + e.what());
    }
    if (flat.size() != header.at("param_count").get<Eigen::Index>() || flat.size() != m.param_count())
        throw DataError("checkpoint parameter count mismatch");
    return GaussianMlpPolicy(m, flat);
}

inline void save_checkpoint(const GaussianMlpPolicy& policy, const std::filesystem::path& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw DataError("cannot write checkpoint " + path.string());
    os << checkpoint_to_string(policy);
}

inline GaussianMlpPolicy load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError("cannot read checkpoint " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return checkpoint_from_string(ss.str());
}

} // namespace dapg

#endif
