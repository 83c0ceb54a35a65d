#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tgmc {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive, platform-independent hash used for all chain seeds.
inline std::uint64_t stable_hash(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

inline Rng make_rng(std::initializer_list<std::uint64_t> parts) { return Rng(stable_hash(parts)); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace tgmc
