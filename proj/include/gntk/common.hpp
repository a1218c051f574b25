#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gntk {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Malformed input data (bad graph, bad file, schema violation).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid configuration (unstable step size, missing snapshots, bad flags).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Kernel matrix is numerically singular; carries the offending eigenvalue.
struct SingularKernelError : std::runtime_error {
    double lambda_min;
    explicit SingularKernelError(double lmin, const std::string& what)
        : std::runtime_error(what), lambda_min(lmin) {}
};

/// Iterative eigenvalue solver hit its iteration cap; best estimate attached.
struct ConvergenceError : std::runtime_error {
    double best_estimate;
    explicit ConvergenceError(double best, const std::string& what)
        : std::runtime_error(what), best_estimate(best) {}
};

/// Gradient descent produced a non-finite loss; carries the offending step.
struct TrainingDivergedError : std::runtime_error {
    long step;
    explicit TrainingDivergedError(long t, const std::string& what)
        : std::runtime_error(what), step(t) {}
};

/// A mid-computation invariant failed (numerics bug, not user error).
struct InternalConsistencyError : std::logic_error {
    explicit InternalConsistencyError(const std::string& what) : std::logic_error(what) {}
};

// ---------------------------------------------------------------------------
// Seeding and random streams
// ---------------------------------------------------------------------------

/// splitmix64 step; used to derive independent sub-seeds from (seed, tags).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes a base seed with role/index tags so adding widths or rows never
/// perturbs the streams of earlier rows.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t role, std::uint64_t index = 0) {
    return splitmix64(splitmix64(seed ^ 0x6a09e667f3bcc908ULL) ^ splitmix64(role * 0x10001 + index));
}

/// Deterministic random stream (xoshiro-free: plain splitmix64 counter mode).
/// Gaussian draws use Box-Muller on uniform doubles, two normals per pair,
/// so the draw order is documented and identical across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x9e3779b97f4a7c15ULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; caches the second draw of each pair.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Uniform sign in {-1, +1}.
    double sign() { return (next_u64() & 1) ? 1.0 : -1.0; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// ---------------------------------------------------------------------------
// Threading
// ---------------------------------------------------------------------------

/// Thread budget: min(hardware, GNTK_LAB_THREADS if set).
int max_threads();

/// Runs fn(i) for i in [0, count) across at most max_threads() workers with a
/// static block partition. Each index is computed exactly once, so results
/// are independent of thread count as long as fn(i) is self-contained.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

inline double clamp_cos(double c) { return c < -1.0 ? -1.0 : (c > 1.0 ? 1.0 : c); }

}  // namespace gntk
