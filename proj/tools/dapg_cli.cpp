#include "dapg.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace dapg;

namespace {

std::vector<double> parse_axis(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw ConfigError("bad grid value '" + item + "'");
        }
        if (used != item.size())
            throw ConfigError("bad grid value '" + item + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw ConfigError("grid axis is empty");
    std::sort(out.begin(), out.end());
    return out;
}

// "m1,m2,...:s1,s2,..."
std::pair<std::vector<double>, std::vector<double>> parse_grid(const std::string& text)
{
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw ConfigError("grid must look like 'm1,m2:s1,s2'");
    return {parse_axis(text.substr(0, colon)), parse_axis(text.substr(colon + 1))};
}

void write_or_print(const std::string& text, const std::string& path)
{
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!(f << text))
        throw DataError("cannot write " + path);
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& conditions,
              const std::vector<std::uint64_t>& seeds, const std::string& out)
{
    ExperimentConfig cfg = load_config(config_path);
    if (!conditions.empty()) {
        cfg.conditions.clear();
        for (const auto& c : conditions)
            cfg.conditions.push_back(parse_condition(c));
    }
    if (!seeds.empty())
        cfg.seeds = seeds;
    const auto summary = out.empty() ? run_experiment(cfg) : run_experiment(cfg, std::filesystem::path(out));
    std::cout << "wrote " << summary.directory.string() << '\n' << summary_table(summary, cfg);
    int failed = 0;
    for (const auto& r : summary.runs)
        if (!r.ok()) {
            std::cerr << to_string(r.condition) << " seed " << r.seed << ": " << r.error << '\n';
            ++failed;
        }
    return failed ? 2 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Demo-augmented natural policy gradient experiments"};
    app.require_subcommand(1);

    std::string config_path, out;
    std::vector<std::string> conditions;
    std::vector<std::uint64_t> seeds;
    auto* train = app.add_subcommand("train", "Run an experiment from a config file");
    train->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    train->add_option("--condition", conditions, "Restrict to these conditions");
    train->add_option("--seed", seeds, "Restrict to these seeds");
    train->add_option("--out", out, "Output directory (default: $DAPG_OUTPUT_ROOT/<name>)");

    auto* demos = app.add_subcommand("demos", "Demonstration utilities");
    demos->require_subcommand(1);
    std::string env_name = "relocate", demo_out;
    int n_demos = 25;
    double noise = 0.1, mass = 1.0, size = 1.0;
    std::uint64_t seed = 0;
    auto* collect = demos->add_subcommand("collect", "Collect scripted-expert demonstrations");
    collect->add_option("--env", env_name, "relocate, pen, door or hammer");
    collect->add_option("--n", n_demos, "Number of successful trajectories");
    collect->add_option("--noise", noise, "Uniform action noise amplitude");
    collect->add_option("--seed", seed, "Seed");
    collect->add_option("--mass-scale", mass, "Object mass scale");
    collect->add_option("--size-scale", size, "Object size scale");
    collect->add_option("--out", demo_out, "Output JSONL file")->required();

    std::string checkpoint;
    int n_eval = 100;
    auto* eval = app.add_subcommand("eval", "Success rate of a checkpoint");
    eval->add_option("--checkpoint", checkpoint, "Policy file")->required()->check(CLI::ExistingFile);
    eval->add_option("--env", env_name, "relocate, pen, door or hammer");
    eval->add_option("--n-eval", n_eval, "Evaluation rollouts");
    eval->add_option("--seed", seed, "Seed");
    eval->add_option("--mass-scale", mass, "Object mass scale");
    eval->add_option("--size-scale", size, "Object size scale");

    std::string grid = "0.5,0.75,1,1.5,2:0.7,0.85,1,1.15,1.3", sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Success over a mass x size grid");
    sweep->add_option("--checkpoint", checkpoint, "Policy file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--env", env_name, "relocate, pen, door or hammer");
    sweep->add_option("--grid", grid, "Mass and size axes as 'm1,m2:s1,s2'");
    sweep->add_option("--n-eval", n_eval, "Rollouts per cell");
    sweep->add_option("--seed", seed, "Seed");
    sweep->add_option("--out", sweep_out, "CSV output (default: stdout)");

    std::string rundir;
    auto* report = app.add_subcommand("report", "Recompute the summary table of a run directory");
    report->add_option("--rundir", rundir, "Run directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train)
            return cmd_train(config_path, conditions, seeds, out);
        if (*collect) {
            const ObjectVariation v{mass, size};
            v.validate();
            CollectStats stats;
            const auto ds = collect_demos(parse_env_kind(env_name), v, n_demos, noise, seed, 100, &stats);
            save_demos(ds, demo_out);
            std::cout << "wrote " << ds.trajectories.size() << " demonstrations (" << stats.attempts
                      << " attempts) to " << demo_out << '\n';
            return 0;
        }
        if (*eval) {
            const auto policy = load_checkpoint(checkpoint);
            EnvFactory f;
            f.kind = parse_env_kind(env_name);
            f.variation = ObjectVariation{mass, size};
            f.variation.validate();
            const auto r = evaluate_success(policy, f, n_eval, seed);
            std::cout << "mean_action_success " << r.mean_action_rate << "\nstochastic_success " << r.stochastic_rate
                      << "\nn_eval " << r.n_eval << '\n';
            return 0;
        }
        if (*sweep) {
            const auto policy = load_checkpoint(checkpoint);
            const auto [masses, sizes] = parse_grid(grid);
            const auto g = robustness_sweep(policy, parse_env_kind(env_name), masses, sizes, n_eval, seed);
            write_or_print(grid_to_csv(g), sweep_out);
            std::cerr << "mean success " << g.mean() << '\n';
            return 0;
        }
        if (*report) {
            ExperimentConfig cfg;
            const auto summary = load_run_directory(rundir, &cfg);
            std::cout << summary_table(summary, cfg);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
