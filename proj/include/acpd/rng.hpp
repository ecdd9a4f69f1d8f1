#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace acpd {

using Rng = std::mt19937_64;

// The std distributions are implementation-defined, so every draw that feeds
// a trace goes through these helpers to keep runs identical across platforms.

/// Uniform integer in [0, n) by rejection; n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = Rng::max() - (Rng::max() % n + 1) % n;
    std::uint64_t draw = rng();
    while (draw > limit) draw = rng();
    return draw % n;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (one value per call).
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Derives an independent stream seed from a base seed and a stream id.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace acpd
