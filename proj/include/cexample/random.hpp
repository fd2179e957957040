#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cexample {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hierarchical seed mixing: child = splitmix64(parent ^ splitmix64(fnv1a64(tag) + index)).
/// Stages derive their seeds from the master seed with a fixed tag so each
/// stage can be rerun in isolation.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag, std::uint64_t index = 0) {
  return splitmix64(parent ^ splitmix64(fnv1a64(tag) + index));
}

/// Uniform on [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on [-bound, bound). Returns exactly 0 when bound is 0.
inline double uniform_symmetric(Rng& rng, double bound) { return bound * (2.0 * uniform01(rng) - 1.0); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace cexample
