#pragma once

#include <cmath>
#include <cstdint>

namespace mmsplat {

// Counter-based deterministic random numbers. Every draw is a pure function
// of the key, so training can resume from a checkpoint without carrying
// generator state, and results do not depend on call order or thread count.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

// Uniform in [0,1) with 53 random bits.
inline double uniform(std::uint64_t key) {
    return static_cast<double>(key >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
    return uniform(mix(seed, a, b, c));
}

inline double uniform_range(double lo, double hi, std::uint64_t seed, std::uint64_t a,
                            std::uint64_t b = 0, std::uint64_t c = 0) {
    return lo + (hi - lo) * uniform(seed, a, b, c);
}

// Standard normal via Box-Muller on two derived uniforms.
inline double normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                     std::uint64_t c = 0) {
    const std::uint64_t k = mix(seed, a, b, c);
    double u1 = uniform(k);
    const double u2 = uniform(splitmix64(k ^ 0x243f6a8885a308d3ULL));
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng
}  // namespace mmsplat
