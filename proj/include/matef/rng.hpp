#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "matef/hash.hpp"

namespace matef {

/// SplitMix64 step: advances state by the golden-gamma increment and returns
/// the mixed output. Pinned so that runs are bit-identical across platforms.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Pure seed derivation: SplitMix64 applied to
/// master_seed XOR FNV-1a-64(run_id || "/" || purpose).
inline std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                        std::string_view run_id,
                                        std::string_view purpose) {
    std::string key;
    key.reserve(run_id.size() + purpose.size() + 1);
    key.append(run_id);
    key.push_back('/');
    key.append(purpose);
    std::uint64_t state = master_seed ^ fnv1a64(key);
    return splitmix64_next(state);
}

/// One independent random stream per (run, category, purpose). All draws used
/// anywhere in the framework go through this class so their byte-level
/// behavior stays pinned.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform in [0,1): (x >> 11) * 2^-53.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_unit() < p; }

    /// Inclusive uniform integer via floor(u * (b - a + 1)) + a.
    std::int64_t uniform_int(std::int64_t a, std::int64_t b) {
        double u = next_unit();
        auto span = static_cast<double>(b - a + 1);
        return a + static_cast<std::int64_t>(u * span);
    }

    /// Knuth's multiplication method. O(lambda) draws; callers validate that
    /// lambda stays well below exp underflow (~700).
    std::uint64_t poisson(double lambda) {
        if (lambda <= 0.0)
            return 0;
        const double limit = std::exp(-lambda);
        std::uint64_t k = 0;
        double product = 1.0;
        do {
            ++k;
            product *= next_unit();
        } while (product > limit);
        return k - 1;
    }

    /// Box-Muller; consumes two uniforms per call, no caching so draw order
    /// stays obvious.
    double normal(double mu, double sigma) {
        double u1 = next_unit();
        double u2 = next_unit();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        double radius = std::sqrt(-2.0 * std::log(u1));
        constexpr double kTwoPi = 6.283185307179586476925286766559;
        return mu + sigma * radius * std::cos(kTwoPi * u2);
    }

private:
    std::uint64_t state_;
};

} // namespace matef
