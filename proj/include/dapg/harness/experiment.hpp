#ifndef DAPG_HARNESS_EXPERIMENT_HPP
#define DAPG_HARNESS_EXPERIMENT_HPP

#include "dapg/checkpoint.hpp"
#include "dapg/demo_augmented.hpp"
#include "dapg/harness/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dapg {

struct RunOutcome {
    Condition condition = Condition::npg_sparse;
    std::uint64_t seed = 0;
    LearningCurve curve;
    std::optional<GaussianMlpPolicy> policy;
    int iterations_to_threshold = never_reached;
    std::optional<double> bc_final_nll;
    double bc_wall_time = 0.0;
    std::string error;

    bool ok() const { return error.empty(); }
};

inline GaussianMlpPolicy initial_policy(const ExperimentConfig& cfg, std::uint64_t seed)
{
    return GaussianMlpPolicy::initialize(cfg.manifest(), derive_seed(seed, Stream::policy_init));
}

/// Demonstrations for one seed: loaded from cfg.demo_file when given, otherwise
/// collected from the scripted expert at the nominal variation.
inline DemoDataset experiment_demos(const ExperimentConfig& cfg, std::uint64_t seed)
{
    const EnvFingerprint expected{cfg.env, cfg.variation, demo_format_version};
    if (!cfg.demo_file.empty())
        return load_demos(cfg.demo_file, expected);
    return collect_demos(cfg.env, cfg.variation, cfg.n_demos, cfg.demo_noise, seed, cfg.horizon);
}

/// Runs one (condition, seed) cell. Errors are captured in the outcome.
inline RunOutcome run_condition(const ExperimentConfig& cfg, Condition condition, std::uint64_t seed,
                                const DemoDataset* demos = nullptr, const IterationCallback& on_iteration = {})
{
    RunOutcome out;
    out.condition = condition;
    out.seed = seed;
    try {
        cfg.validate();
        const EnvFactory factory = cfg.factory(condition);
        const GaussianMlpPolicy init = initial_policy(cfg, seed);
        std::optional<DemoDataset> owned;
        if ((condition == Condition::bc_only || condition == Condition::dapg_sparse) && !demos) {
            owned = experiment_demos(cfg, seed);
            demos = &*owned;
        }
        switch (condition) {
        case Condition::npg_sparse:
        case Condition::npg_shaped: {
            TrainResult r = train_npg(factory, init, cfg.npg(), seed, on_iteration);
            out.curve = std::move(r.curve);
            out.policy = std::move(r.policy);
            break;
        }
        case Condition::bc_only: {
            demos->require_compatible(EnvFingerprint{cfg.env, cfg.variation, demo_format_version});
            BcResult bc = behavior_clone(init, *demos, cfg.dapg, seed);
            out.bc_wall_time = bc.wall_time;
            const SuccessReport eval =
                evaluate_success(bc.policy, factory, cfg.npg().n_eval, seed, 0, cfg.npg().threads, cfg.npg().eval_stochastic);
            IterationLog log;
            log.iter = 0;
            log.success_rate = eval.mean_action_rate;
            if (cfg.npg().eval_stochastic)
                log.stochastic_success_rate = eval.stochastic_rate;
            log.bc_final_nll = bc.final_nll;
            out.curve.push_back(log);
            if (on_iteration)
                on_iteration(log, bc.policy);
            out.bc_final_nll = bc.final_nll;
            out.policy = std::move(bc.policy);
            break;
        }
        case Condition::dapg_sparse: {
            DapgResult r = train_dapg(factory, init, *demos, cfg.dapg, seed, on_iteration);
            out.bc_wall_time = r.bc.wall_time;
            out.bc_final_nll = r.bc.final_nll;
            out.curve = std::move(r.train.curve);
            out.policy = std::move(r.train.policy);
            break;
        }
        }
        out.iterations_to_threshold = iterations_to_threshold(out.curve, cfg.npg().success_threshold);
    } catch (const std::exception& e) {
        out.error = e.what();
        log_warn(to_string(condition) + " seed " + std::to_string(seed) + " failed: " + e.what());
    }
    return out;
}

struct CurveStats {
    int iter = 0;
    int n = 0;
    double mean_success = 0.0;
    double std_success = 0.0;
    double mean_return = 0.0;
    double std_return = 0.0;
};

/// Mean and population std across seeds per iteration. Runs that stopped
/// early contribute only to the iterations they logged.
inline std::vector<CurveStats> curve_statistics(const std::vector<const LearningCurve*>& curves)
{
    std::size_t len = 0;
    for (const auto* c : curves)
        len = std::max(len, c->size());
    std::vector<CurveStats> out;
    for (std::size_t i = 0; i < len; ++i) {
        CurveStats s;
        s.iter = static_cast<int>(i);
        double ss = 0.0, sr = 0.0, ss2 = 0.0, sr2 = 0.0;
        for (const auto* c : curves) {
            if (i >= c->size())
                continue;
            const auto& r = (*c)[i];
            ++s.n;
            ss += r.success_rate;
            ss2 += r.success_rate * r.success_rate;
            sr += r.mean_return;
            sr2 += r.mean_return * r.mean_return;
        }
        s.mean_success = ss / s.n;
        s.mean_return = sr / s.n;
        s.std_success = std::sqrt(std::max(0.0, ss2 / s.n - s.mean_success * s.mean_success));
        s.std_return = std::sqrt(std::max(0.0, sr2 / s.n - s.mean_return * s.mean_return));
        out.push_back(s);
    }
    return out;
}

inline std::string format_iterations(int n)
{
    return n == never_reached ? "inf" : std::to_string(n);
}

/// Simulated robot hours to reach the threshold: N x trajectories per
/// iteration x trajectory seconds / 3600. Infinite when never reached.
inline double robot_time_report(int iterations, int traj_per_iter, double trajectory_seconds)
{
    if (iterations == never_reached)
        return std::numeric_limits<double>::infinity();
    if (iterations < 0 || traj_per_iter < 1 || !(trajectory_seconds > 0.0))
        throw ConfigError("robot_time_report: invalid arguments");
    return static_cast<double>(iterations) * traj_per_iter * trajectory_seconds / 3600.0;
}

inline double robot_time_report(const LearningCurve& curve, const ExperimentConfig& cfg)
{
    return robot_time_report(iterations_to_threshold(curve, cfg.npg().success_threshold), cfg.npg().traj_per_iter,
                             cfg.trajectory_seconds());
}

inline double median_iterations(std::vector<int> ns)
{
    if (ns.empty())
        return std::numeric_limits<double>::infinity();
    std::sort(ns.begin(), ns.end());
    const auto as_double = [](int n) {
        return n == never_reached ? std::numeric_limits<double>::infinity() : static_cast<double>(n);
    };
    const std::size_t m = ns.size() / 2;
    return ns.size() % 2 ? as_double(ns[m]) : 0.5 * (as_double(ns[m - 1]) + as_double(ns[m]));
}

struct ExperimentSummary {
    std::filesystem::path directory;
    std::vector<RunOutcome> runs;

    std::vector<const RunOutcome*> runs_for(Condition c) const
    {
        std::vector<const RunOutcome*> out;
        for (const auto& r : runs)
            if (r.condition == c)
                out.push_back(&r);
        return out;
    }
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw DataError("cannot write " + path.string());
    os << text;
}

inline std::string curve_to_jsonl(const LearningCurve& curve)
{
    std::ostringstream os;
    for (const auto& r : curve)
        os << to_json(r).dump() << '\n';
    return os.str();
}

inline std::string fmt(double x)
{
    if (std::isinf(x))
        return "inf";
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

} // namespace detail

/// Per-condition table: N per seed, median N and robot hours at the median.
inline std::string summary_table(const ExperimentSummary& s, const ExperimentConfig& cfg)
{
    std::ostringstream os;
    os << "condition,seeds,N_per_seed,median_N,robot_hours_at_median,failed_runs\n";
    for (Condition c : cfg.conditions) {
        std::vector<int> ns;
        std::string per_seed;
        int failed = 0;
        for (const auto* r : s.runs_for(c)) {
            if (!r->ok()) {
                ++failed;
                continue;
            }
            ns.push_back(r->iterations_to_threshold);
            per_seed += (per_seed.empty() ? "" : " ") + format_iterations(r->iterations_to_threshold);
        }
        const double med = median_iterations(ns);
        const double hours = std::isinf(med) ? med : med * cfg.npg().traj_per_iter * cfg.trajectory_seconds() / 3600.0;
        os << to_string(c) << ',' << ns.size() << ',' << per_seed << ',' << detail::fmt(med) << ','
           << detail::fmt(hours) << ',' << failed << '\n';
    }
    return os.str();
}

/// Runs every requested condition for every seed and writes, under
/// out_dir (default: output_root()/cfg.name):
///   config.txt, summary.csv, table.csv, curves_<condition>.csv,
///   <condition>/seed_<s>.jsonl and <condition>/seed_<s>.policy,
///   demos/seed_<s>.jsonl.
/// A failing run is recorded in summary.csv; the remaining runs continue.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                        std::optional<std::filesystem::path> out_dir = std::nullopt)
{
    namespace fs = std::filesystem;
    cfg.validate();
    ExperimentSummary summary;
    summary.directory = out_dir ? *out_dir : output_root() / cfg.name;
    fs::create_directories(summary.directory);
    detail::write_text(summary.directory / "config.txt", config_to_text(cfg));

    const bool needs_demos = std::any_of(cfg.conditions.begin(), cfg.conditions.end(), [](Condition c) {
        return c == Condition::bc_only || c == Condition::dapg_sparse;
    });
    std::map<std::uint64_t, std::optional<DemoDataset>> demos;
    std::map<std::uint64_t, std::string> demo_errors;
    if (needs_demos) {
        fs::create_directories(summary.directory / "demos");
        for (std::uint64_t seed : cfg.seeds) {
            try {
                demos[seed] = experiment_demos(cfg, seed);
                save_demos(*demos[seed], summary.directory / "demos" / ("seed_" + std::to_string(seed) + ".jsonl"));
            } catch (const std::exception& e) {
                demo_errors[seed] = e.what();
            }
        }
    }

    for (Condition c : cfg.conditions) {
        const fs::path dir = summary.directory / to_string(c);
        fs::create_directories(dir);
        for (std::uint64_t seed : cfg.seeds) {
            RunOutcome run;
            const bool demo_condition = c == Condition::bc_only || c == Condition::dapg_sparse;
            if (demo_condition && demo_errors.count(seed)) {
                run.condition = c;
                run.seed = seed;
                run.error = "demonstrations unavailable: " + demo_errors[seed];
            } else {
                run = run_condition(cfg, c, seed, demo_condition ? &*demos[seed] : nullptr);
            }
            const std::string stem = "seed_" + std::to_string(seed);
            detail::write_text(dir / (stem + ".jsonl"), detail::curve_to_jsonl(run.curve));
            if (run.policy)
                save_checkpoint(*run.policy, dir / (stem + ".policy"));
            summary.runs.push_back(std::move(run));
        }

        std::vector<const LearningCurve*> curves;
        for (const auto* r : summary.runs_for(c))
            if (r->ok())
                curves.push_back(&r->curve);
        std::ostringstream os;
        os << "iter,n_seeds,mean_success,std_success,mean_return,std_return\n";
        for (const auto& s : curve_statistics(curves))
            os << s.iter << ',' << s.n << ',' << detail::fmt(s.mean_success) << ',' << detail::fmt(s.std_success)
               << ',' << detail::fmt(s.mean_return) << ',' << detail::fmt(s.std_return) << '\n';
        detail::write_text(summary.directory / ("curves_" + to_string(c) + ".csv"), os.str());
    }

    std::ostringstream os;
    os << "condition,seed,N,iterations_run,final_success,max_success,bc_final_nll";
    if (cfg.npg().log_wall_time)
        os << ",bc_wall_time";
    os << ",error\n";
    for (const auto& r : summary.runs) {
        double final_success = 0.0, max_success = 0.0;
        for (const auto& it : r.curve)
            max_success = std::max(max_success, it.success_rate);
        if (!r.curve.empty())
            final_success = r.curve.back().success_rate;
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << to_string(r.condition) << ',' << r.seed << ',' << format_iterations(r.iterations_to_threshold) << ','
           << r.curve.size() << ',' << detail::fmt(final_success) << ',' << detail::fmt(max_success) << ','
           << (r.bc_final_nll ? detail::fmt(*r.bc_final_nll) : "");
        if (cfg.npg().log_wall_time)
            os << ',' << detail::fmt(r.bc_wall_time);
        os << ',' << err << '\n';
    }
    detail::write_text(summary.directory / "summary.csv", os.str());
    detail::write_text(summary.directory / "table.csv", summary_table(summary, cfg));
    return summary;
}

/// Reads a run directory back and recomputes N from the stored curves.
inline ExperimentSummary load_run_directory(const std::filesystem::path& dir, ExperimentConfig* cfg_out = nullptr)
{
    namespace fs = std::filesystem;
    const ExperimentConfig cfg = load_config(dir / "config.txt");
    ExperimentSummary s;
    s.directory = dir;
    for (Condition c : cfg.conditions)
        for (std::uint64_t seed : cfg.seeds) {
            const fs::path p = dir / to_string(c) / ("seed_" + std::to_string(seed) + ".jsonl");
            RunOutcome r;
            r.condition = c;
            r.seed = seed;
            std::ifstream is(p);
            if (!is) {
                r.error = "missing " + p.string();
                s.runs.push_back(std::move(r));
                continue;
            }
            std::string line;
            try {
                while (std::getline(is, line))
                    if (!line.empty())
                        r.curve.push_back(iteration_from_json(nlohmann::json::parse(line)));
            } catch (const nlohmann::json::exception& e) {
                throw DataError("unreadable curve " + p.string() + ": " + e.what());
            }
            r.iterations_to_threshold = iterations_to_threshold(r.curve, cfg.npg().success_threshold);
            s.runs.push_back(std::move(r));
        }
    if (cfg_out)
        *cfg_out = cfg;
    return s;
}

} // namespace dapg

#endif
