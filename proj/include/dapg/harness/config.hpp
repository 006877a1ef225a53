#ifndef DAPG_HARNESS_CONFIG_HPP
#define DAPG_HARNESS_CONFIG_HPP

#include "dapg/demo_augmented.hpp"
#include "dapg/envs/registry.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dapg {

enum class Condition { npg_sparse, npg_shaped, bc_only, dapg_sparse };

inline const std::vector<Condition>& all_conditions()
{
    static const std::vector<Condition> all{Condition::npg_sparse, Condition::npg_shaped, Condition::bc_only,
                                            Condition::dapg_sparse};
    return all;
}

inline std::string to_string(Condition c)
{
    switch (c) {
    case Condition::npg_sparse: return "npg-sparse";
    case Condition::npg_shaped: return "npg-shaped";
    case Condition::bc_only: return "bc-only";
    case Condition::dapg_sparse: return "dapg-sparse";
    }
    return "unknown";
}

inline Condition parse_condition(const std::string& s)
{
    for (Condition c : all_conditions())
        if (to_string(c) == s)
            return c;
    throw ConfigError("unknown condition '" + s + "' (expected npg-sparse, npg-shaped, bc-only or dapg-sparse)");
}

inline RewardMode reward_mode_for(Condition c)
{
    return c == Condition::npg_shaped ? RewardMode::shaped : RewardMode::sparse;
}

struct ExperimentConfig {
    std::string name = "experiment";
    EnvKind env = EnvKind::relocate;
    ObjectVariation variation{};
    std::optional<EnsembleRanges> ensemble;
    int horizon = 100;
    std::vector<Condition> conditions = all_conditions();
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::vector<int> hidden{32, 32};
    DAPGConfig dapg{};
    int n_demos = 25;
    double demo_noise = 0.1;
    // Load demonstrations from this file instead of collecting them.
    std::string demo_file;

    NPGConfig& npg() { return dapg.npg; }
    const NPGConfig& npg() const { return dapg.npg; }

    double trajectory_seconds() const { return horizon * control_dt; }

    void validate() const
    {
        dapg.validate();
        variation.validate();
        if (ensemble)
            ensemble->validate();
        if (name.empty() || name.find('/') != std::string::npos)
            throw ConfigError("name must be a non-empty single path component");
        if (horizon < 1)
            throw ConfigError("horizon must be >= 1");
        if (conditions.empty())
            throw ConfigError("at least one condition is required");
        if (seeds.empty())
            throw ConfigError("at least one seed is required");
        for (int h : hidden)
            if (h < 1)
                throw ConfigError("hidden layer sizes must be >= 1");
        if (n_demos < 1)
            throw ConfigError("n_demos must be >= 1");
        if (demo_noise < 0.0)
            throw ConfigError("demo_noise must be non-negative");
    }

    EnvFactory factory(Condition c) const
    {
        EnvFactory f;
        f.kind = env;
        f.reward_mode = reward_mode_for(c);
        f.variation = variation;
        f.ensemble = ensemble;
        f.horizon = horizon;
        return f;
    }

    MlpManifest manifest() const
    {
        const ScriptedExpert expert(env);
        MlpManifest m;
        m.input_dim = expert.observation_dim();
        m.hidden = hidden;
        m.output_dim = expert.action_dim();
        return m;
    }
};

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v)
{
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("invalid value '" + v + "' for key '" + key + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("invalid boolean '" + v + "' for key '" + key + "'");
}

inline std::string format_double(double x)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& fmt)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i)
            out += ',';
        out += fmt(xs[i]);
    }
    return out;
}

inline EnsembleRanges& ensure(std::optional<EnsembleRanges>& e)
{
    if (!e)
        e.emplace();
    return *e;
}

} // namespace detail

/// Flat `key = value` text, one entry per line; `#` starts a comment. Keys not
/// listed in the schema are rejected.
inline ExperimentConfig parse_config(std::istream& is)
{
    using namespace detail;
    ExperimentConfig c;
    auto& n = c.dapg.npg;
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
        {"name", [&](auto&, auto& v) { c.name = v; }},
        {"env", [&](auto&, auto& v) { c.env = parse_env_kind(v); }},
        {"mass_scale", [&](auto& k, auto& v) { c.variation.mass_scale = parse_number<double>(k, v); }},
        {"size_scale", [&](auto& k, auto& v) { c.variation.size_scale = parse_number<double>(k, v); }},
        {"ensemble_mass_low", [&](auto& k, auto& v) { ensure(c.ensemble).mass_low = parse_number<double>(k, v); }},
        {"ensemble_mass_high", [&](auto& k, auto& v) { ensure(c.ensemble).mass_high = parse_number<double>(k, v); }},
        {"ensemble_size_low", [&](auto& k, auto& v) { ensure(c.ensemble).size_low = parse_number<double>(k, v); }},
        {"ensemble_size_high", [&](auto& k, auto& v) { ensure(c.ensemble).size_high = parse_number<double>(k, v); }},
        {"horizon", [&](auto& k, auto& v) { c.horizon = parse_number<int>(k, v); }},
        {"conditions",
         [&](auto&, auto& v) {
             c.conditions.clear();
             for (const auto& s : split(v, ','))
                 c.conditions.push_back(parse_condition(s));
         }},
        {"seeds",
         [&](auto& k, auto& v) {
             c.seeds.clear();
             for (const auto& s : split(v, ','))
                 c.seeds.push_back(parse_number<std::uint64_t>(k, s));
         }},
        {"hidden",
         [&](auto& k, auto& v) {
             c.hidden.clear();
             if (v != "none")
                 for (const auto& s : split(v, ','))
                     c.hidden.push_back(parse_number<int>(k, s));
         }},
        {"delta", [&](auto& k, auto& v) { n.delta = parse_number<double>(k, v); }},
        {"cg_iters", [&](auto& k, auto& v) { n.cg_iters = parse_number<int>(k, v); }},
        {"cg_residual_tol", [&](auto& k, auto& v) { n.cg_residual_tol = parse_number<double>(k, v); }},
        {"fisher_damping", [&](auto& k, auto& v) { n.fisher_damping = parse_number<double>(k, v); }},
        {"traj_per_iter", [&](auto& k, auto& v) { n.traj_per_iter = parse_number<int>(k, v); }},
        {"max_iters", [&](auto& k, auto& v) { n.max_iters = parse_number<int>(k, v); }},
        {"discount", [&](auto& k, auto& v) { n.discount = parse_number<double>(k, v); }},
        {"gae_lambda", [&](auto& k, auto& v) { n.gae_lambda = parse_number<double>(k, v); }},
        {"n_eval", [&](auto& k, auto& v) { n.n_eval = parse_number<int>(k, v); }},
        {"success_threshold", [&](auto& k, auto& v) { n.success_threshold = parse_number<double>(k, v); }},
        {"stop_at_threshold", [&](auto& k, auto& v) { n.stop_at_threshold = parse_bool(k, v); }},
        {"eval_stochastic", [&](auto& k, auto& v) { n.eval_stochastic = parse_bool(k, v); }},
        {"log_wall_time", [&](auto& k, auto& v) { n.log_wall_time = parse_bool(k, v); }},
        {"threads", [&](auto& k, auto& v) { n.threads = parse_number<int>(k, v); }},
        {"lambda0", [&](auto& k, auto& v) { c.dapg.lambda0 = parse_number<double>(k, v); }},
        {"lambda1", [&](auto& k, auto& v) { c.dapg.lambda1 = parse_number<double>(k, v); }},
        {"bc_epochs", [&](auto& k, auto& v) { c.dapg.bc_epochs = parse_number<int>(k, v); }},
        {"bc_step_size", [&](auto& k, auto& v) { c.dapg.bc_step_size = parse_number<double>(k, v); }},
        {"bc_batch", [&](auto& k, auto& v) { c.dapg.bc_batch = parse_number<int>(k, v); }},
        {"bc_optimizer",
         [&](auto& k, auto& v) {
             if (v == "adam")
                 c.dapg.bc_optimizer = BcOptimizer::adam;
             else if (v == "sgd")
                 c.dapg.bc_optimizer = BcOptimizer::sgd;
             else
                 throw ConfigError("invalid value '" + v + "' for key '" + k + "'");
         }},
        {"reset_logstd_after_bc", [&](auto& k, auto& v) { c.dapg.reset_logstd_after_bc = parse_bool(k, v); }},
        {"demos_in_fisher", [&](auto& k, auto& v) { c.dapg.demos_in_fisher = parse_bool(k, v); }},
        {"n_demos", [&](auto& k, auto& v) { c.n_demos = parse_number<int>(k, v); }},
        {"demo_noise", [&](auto& k, auto& v) { c.demo_noise = parse_number<double>(k, v); }},
        {"demo_file", [&](auto&, auto& v) { c.demo_file = v; }},
    };

    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(key, value);
    }
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(const std::string& text)
{
    std::istringstream is(text);
    return parse_config(is);
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot read config " + path.string());
    return parse_config(is);
}

/// Canonical text form; parse_config(config_to_text(c)) reproduces c.
inline std::string config_to_text(const ExperimentConfig& c)
{
    using namespace detail;
    const auto& n = c.dapg.npg;
    const auto b = [](bool x) { return std::string(x ? "true" : "false"); };
    std::ostringstream os;
    os << "name = " << c.name << '\n'
       << "env = " << to_string(c.env) << '\n'
       << "mass_scale = " << format_double(c.variation.mass_scale) << '\n'
       << "size_scale = " << format_double(c.variation.size_scale) << '\n';
    if (c.ensemble)
        os << "ensemble_mass_low = " << format_double(c.ensemble->mass_low) << '\n'
           << "ensemble_mass_high = " << format_double(c.ensemble->mass_high) << '\n'
           << "ensemble_size_low = " << format_double(c.ensemble->size_low) << '\n'
           << "ensemble_size_high = " << format_double(c.ensemble->size_high) << '\n';
    os << "horizon = " << c.horizon << '\n'
       << "conditions = " << join(c.conditions, [](Condition x) { return to_string(x); }) << '\n'
       << "seeds = " << join(c.seeds, [](std::uint64_t x) { return std::to_string(x); }) << '\n'
       << "hidden = " << (c.hidden.empty() ? "none" : join(c.hidden, [](int x) { return std::to_string(x); }))
       << '\n'
       << "delta = " << format_double(n.delta) << '\n'
       << "cg_iters = " << n.cg_iters << '\n'
       << "cg_residual_tol = " << format_double(n.cg_residual_tol) << '\n'
       << "fisher_damping = " << format_double(n.fisher_damping) << '\n'
       << "traj_per_iter = " << n.traj_per_iter << '\n'
       << "max_iters = " << n.max_iters << '\n'
       << "discount = " << format_double(n.discount) << '\n'
       << "gae_lambda = " << format_double(n.gae_lambda) << '\n'
       << "n_eval = " << n.n_eval << '\n'
       << "success_threshold = " << format_double(n.success_threshold) << '\n'
       << "stop_at_threshold = " << b(n.stop_at_threshold) << '\n'
       << "eval_stochastic = " << b(n.eval_stochastic) << '\n'
       << "log_wall_time = " << b(n.log_wall_time) << '\n'
       << "threads = " << n.threads << '\n'
       << "lambda0 = " << format_double(c.dapg.lambda0) << '\n'
       << "lambda1 = " << format_double(c.dapg.lambda1) << '\n'
       << "bc_epochs = " << c.dapg.bc_epochs << '\n'
       << "bc_step_size = " << format_double(c.dapg.bc_step_size) << '\n'
       << "bc_batch = " << c.dapg.bc_batch << '\n'
       << "bc_optimizer = " << (c.dapg.bc_optimizer == BcOptimizer::adam ? "adam" : "sgd") << '\n'
       << "reset_logstd_after_bc = " << b(c.dapg.reset_logstd_after_bc) << '\n'
       << "demos_in_fisher = " << b(c.dapg.demos_in_fisher) << '\n'
       << "n_demos = " << c.n_demos << '\n'
       << "demo_noise = " << format_double(c.demo_noise) << '\n';
    if (!c.demo_file.empty())
        os << "demo_file = " << c.demo_file << '\n';
    return os.str();
}

/// Root directory for run output: $DAPG_OUTPUT_ROOT, else ./runs.
inline std::filesystem::path output_root()
{
    if (const char* env = std::getenv("DAPG_OUTPUT_ROOT"); env && *env)
        return env;
    return "runs";
}

} // namespace dapg

#endif
