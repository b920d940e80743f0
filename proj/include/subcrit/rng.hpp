#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace subcrit {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of replication stream `stream` under master seed `seed`. Streams are
/// decorrelated by hashing, so worker i always sees the same sequence no
/// matter how replications are scheduled.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Exponential with the given rate (> 0).
inline double exponential(Rng& rng, double rate) {
  // 1 - U lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform01(rng)) / rate;
}

}  // namespace subcrit
