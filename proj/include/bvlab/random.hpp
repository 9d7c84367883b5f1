#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace bvlab {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a; stable across platforms, used for seed splitting and config hashes.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Child seed for the subtask named `label` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0)
{
    std::uint64_t h = fnv1a(label);
    h ^= seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ULL;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::string_view label, std::uint64_t index = 0)
{
    return Rng(derive_seed(seed, label, index));
}

/// Standard normal deviate via Box-Muller on the raw engine output, so that
/// streams are identical across standard library implementations.
inline double standard_normal(Rng& rng)
{
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace bvlab
