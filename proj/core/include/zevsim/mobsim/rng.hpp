#pragma once

#include <cmath>
#include <cstdint>

namespace zevsim::mobsim {

/// Counter-based draws: the same (seed, stream, key, index) always yields the
/// same number, independent of how many other draws happened in between.
/// Paired runs that share a seed therefore share random numbers per agent.
inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { ModeChoice = 1, Reroute = 2, ChargeService = 3, ChargeIntent = 4 };

inline double keyed_uniform(std::uint64_t seed, Stream stream, std::uint64_t key, std::uint64_t index = 0) noexcept {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)));
  h = splitmix64(h ^ key);
  h = splitmix64(h ^ index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double keyed_exponential(double mean, std::uint64_t seed, Stream stream, std::uint64_t key,
                                std::uint64_t index = 0) noexcept {
  return -mean * std::log1p(-keyed_uniform(seed, stream, key, index));
}

}  // namespace zevsim::mobsim
