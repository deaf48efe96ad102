#pragma once

// Counter-based random number generation. Every draw is a pure function of a
// 64-bit key and a counter, so any stream can be sampled in any order and
// results never depend on loop scheduling.

#include <cmath>
#include <cstdint>
#include <string_view>

namespace warprf::rng {

/// SplitMix64 finalizer.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

template <typename... Rest>
std::uint64_t combine(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return combine(combine(a, b), static_cast<std::uint64_t>(rest)...);
}

/// FNV-1a over a byte string; used to key streams by view ids.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Uniform double in [0, 1).
inline double uniform(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(mix(key ^ mix(counter)) >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::uint64_t key, std::uint64_t counter, std::uint64_t n) {
  return mix(key ^ mix(counter)) % n;
}

/// Standard normal via Box-Muller; consumes counters (2*counter, 2*counter+1).
inline double normal(std::uint64_t key, std::uint64_t counter) {
  double u1 = uniform(key, 2 * counter);
  double u2 = uniform(key, 2 * counter + 1);
  if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace warprf::rng
