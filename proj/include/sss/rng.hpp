#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sss {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent streams from (seed, index).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng derive_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(mix64(seed)), static_cast<std::uint32_t>(mix64(seed) >> 32),
                      static_cast<std::uint32_t>(mix64(stream ^ 0x5bd1e995ULL)),
                      static_cast<std::uint32_t>(mix64(salt + 0x27d4eb2fULL))};
    return Rng(seq);
}

// Uniform double in [0,1) from the top 53 bits; portable unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool coin(Rng& rng, double p = 0.5) {
    return uniform01(rng) < p;
}

// Unbiased integer in [0, bound) by rejection.
inline std::size_t uniform_index(Rng& rng, std::size_t bound) {
    const std::uint64_t b = bound;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<std::size_t>(r % b);
}

// Box-Muller on uniform01 so draws are identical across standard libraries.
inline double standard_normal(Rng& rng) {
    double u1;
    do {
        u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <class Range>
void shuffle(Range& range, Rng& rng) {
    for (std::size_t i = range.size(); i > 1; --i) {
        std::swap(range[i - 1], range[uniform_index(rng, i)]);
    }
}

} // namespace sss
