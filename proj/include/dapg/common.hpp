#ifndef DAPG_COMMON_HPP
#define DAPG_COMMON_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dapg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Invalid or inconsistent configuration (dimensions, unknown kinds, bad ranges).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad runtime input such as a non-finite action or observation.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Corrupt or mismatched data on disk (checksum, fingerprint, format version).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double control_dt = 0.02;

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(a + std::numbers::pi, two_pi);
    if (r <= 0.0)
        r += two_pi;
    return r - std::numbers::pi;
}

// splitmix64 finalizer; used to derive independent streams from one master seed.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Named sub-streams of a master seed.
enum class Stream : std::uint64_t {
    train = 1,
    eval = 2,
    eval_stochastic = 3,
    policy_init = 4,
    demos = 5,
    ensemble = 6,
    bc_shuffle = 7,
    env_reset = 8,
    action_noise = 9,
    sweep = 10,
};

/// Counter-based seed derivation: the result depends only on the arguments, so
/// batches can be generated in any order (or concurrently) with identical output.
inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t a = 0, std::uint64_t b = 0)
{
    std::uint64_t h = mix64(master);
    h = mix64(h ^ static_cast<std::uint64_t>(stream));
    h = mix64(h ^ a);
    return mix64(h ^ (b * 0x2545f4914f6cdd1dULL));
}

enum class LogLevel { quiet = 0, warn = 1, info = 2 };

inline LogLevel& log_level()
{
    static LogLevel level = LogLevel::warn;
    return level;
}

inline void log_warn(std::string_view msg)
{
    if (log_level() >= LogLevel::warn)
        std::cerr << "[warn] " << msg << '\n';
}

inline void log_info(std::string_view msg)
{
    if (log_level() >= LogLevel::info)
        std::cerr << "[info] " << msg << '\n';
}

} // namespace dapg

#endif
