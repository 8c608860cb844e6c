#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace spdelab::rng {

// Counter-based generation: every variate is a pure function of
// (seed, stream, counter), so parallel fills are order-independent and
// bitwise reproducible.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer: bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// n-th output of the SplitMix64 sequence keyed by `key`.
inline std::uint64_t bits_at(std::uint64_t key, std::uint64_t n) noexcept {
    return mix64(key + (n + 1) * kGolden);
}

/// Derive an independent stream key from a seed and a stream index.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix64(seed + kGolden * (stream + 1)) ^ (stream * 0xD1342543DE82EF95ULL);
}

/// Map 64 bits to a uniform in the open interval (0,1).
inline double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

inline double uniform_at(std::uint64_t key, std::uint64_t n) noexcept {
    return to_unit(bits_at(key, n));
}

/// Box-Muller pair from uniform counters 2n and 2n+1 of the stream.
struct NormalPair {
    double first;
    double second;
};

inline NormalPair normal_pair_at(std::uint64_t key, std::uint64_t n) noexcept {
    const double u1 = uniform_at(key, 2 * n);
    const double u2 = uniform_at(key, 2 * n + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

inline double normal_at(std::uint64_t key, std::uint64_t n) noexcept {
    return normal_pair_at(key, n).first;
}

/// Sequential view over one counter stream; deterministic per key.
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    double uniform() { return uniform_at(key_, next_++); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const NormalPair p = normal_pair_at(key_, pair_next_++);
        // uniform() and normal() share the counter space only through
        // distinct sub-counters, so interleaving stays reproducible.
        spare_ = p.second;
        have_spare_ = true;
        return p.first;
    }

private:
    std::uint64_t key_;
    std::uint64_t next_ = 0;
    std::uint64_t pair_next_ = 1ULL << 32;  // separate uniform and normal counters
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace spdelab::rng
