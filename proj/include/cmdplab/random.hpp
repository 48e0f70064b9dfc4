#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace cmdplab {

/// SplitMix64 finalizer, used to derive independent seeds for each stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * Deterministic generator used throughout the library: std::mt19937_64 seeded
 * with splitmix64(splitmix64(seed) ^ stream). The engine is fully specified by
 * the standard, and doubles are formed from the top 53 bits by hand, so
 * sequences are identical across platforms and standard libraries.
 */
class Rng {
public:
    enum Stream : std::uint64_t { Environment = 0, Learner = 1, Instances = 2 };

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

/// Inverse-CDF draw from a discrete distribution given one uniform u in [0,1).
/// Round-off at the top end falls back to the last index with positive mass.
inline std::size_t sample_index(std::span<const double> probs, double u) {
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        acc += probs[i];
        if (u < acc) return i;
    }
    return last_positive;
}

} // namespace cmdplab
