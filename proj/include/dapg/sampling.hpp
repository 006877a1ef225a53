#ifndef DAPG_SAMPLING_HPP
#define DAPG_SAMPLING_HPP

#include "dapg/envs/registry.hpp"
#include "dapg/mdp.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dapg {

/// Runs `n` independent episodes. Episode i uses seed derive_seed(master,
/// stream, round, i), so the batch is identical for any thread count.
template <ActionSource Policy>
std::vector<Trajectory> sample_trajectories(const EnvFactory& factory, const Policy& policy, int n,
                                            std::uint64_t master_seed, Stream stream, std::uint64_t round,
                                            bool deterministic, int threads = 1)
{
    std::vector<Trajectory> out(static_cast<std::size_t>(std::max(n, 0)));
    auto run_one = [&](int i) {
        const std::uint64_t seed = derive_seed(master_seed, stream, round, static_cast<std::uint64_t>(i));
        auto env = factory.make(seed);
        out[static_cast<std::size_t>(i)] = rollout(*env, policy, factory.horizon, seed, deterministic);
    };

    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i)
            run_one(i);
        return out;
    }

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < std::min(threads, n); ++w)
            pool.emplace_back([&] {
                for (int i = next++; i < n; i = next++) {
                    try {
                        run_one(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                            failure = std::current_exception();
                    }
                }
            });
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

inline double success_fraction(const std::vector<Trajectory>& trajs)
{
    if (trajs.empty())
        return 0.0;
    const auto hits = std::count_if(trajs.begin(), trajs.end(), [](const Trajectory& t) { return t.success; });
    return static_cast<double>(hits) / static_cast<double>(trajs.size());
}

inline double mean_undiscounted_return(const std::vector<Trajectory>& trajs)
{
    if (trajs.empty())
        return 0.0;
    double total = 0.0;
    for (const auto& t : trajs)
        total += undiscounted_return(t);
    return total / static_cast<double>(trajs.size());
}

struct SuccessReport {
    double mean_action_rate = 0.0;
    double stochastic_rate = 0.0;
    int n_eval = 0;
};

/// Success rate over fresh resets, for both the mean action and sampled actions.
template <ActionSource Policy>
SuccessReport evaluate_success(const Policy& policy, const EnvFactory& factory, int n_eval, std::uint64_t seed,
                               std::uint64_t round = 0, int threads = 1, bool with_stochastic = true)
{
    if (n_eval < 1)
        throw ConfigError("n_eval must be >= 1");
    SuccessReport r;
    r.n_eval = n_eval;
    r.mean_action_rate =
        success_fraction(sample_trajectories(factory, policy, n_eval, seed, Stream::eval, round, true, threads));
    if (with_stochastic)
        r.stochastic_rate = success_fraction(
            sample_trajectories(factory, policy, n_eval, seed, Stream::eval_stochastic, round, false, threads));
    return r;
}

} // namespace dapg

#endif
