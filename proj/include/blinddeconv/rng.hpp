#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace blinddeconv {

//! SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Order-sensitive hash of a list of integers, used to derive independent
//! stream seeds such as (master seed, fixture id, n, replicate).
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

using Rng = std::mt19937_64;

//! Uniform double in [0, 1) from 53 random bits; identical on every platform,
//! unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

//! Standard normal by Box-Muller (platform independent).
double standard_normal(Rng& rng);

}  // namespace blinddeconv
