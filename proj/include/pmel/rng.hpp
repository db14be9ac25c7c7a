#pragma once

#include <cmath>
#include <cstdint>

namespace pmel {

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream labels), so trajectories are reproducible bit for bit
// regardless of evaluation order, threading, or how many draws other
// components consumed.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Folds one label into a seed. Chaining derive_seed calls gives a cheap
// keyed hash; collisions between distinct label tuples are as likely as
// for any 64-bit mixer, i.e. irrelevant at our draw counts.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
  std::uint64_t s = seed ^ (0x9E3779B97F4A7C15ULL + (label << 6) + (label >> 2));
  return splitmix64(s);
}

template <typename... Labels>
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label, Labels... rest) {
  return derive_seed(derive_seed(seed, label), static_cast<std::uint64_t>(rest)...);
}

// Maps 64 bits to (0, 1]; the +1 keeps log() finite below.
inline double uniform_from_bits(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Standard normal draw keyed by an already-derived seed (Box-Muller).
inline double standard_normal(std::uint64_t derived) {
  std::uint64_t s = derived;
  const double u1 = uniform_from_bits(splitmix64(s));
  const double u2 = uniform_from_bits(splitmix64(s));
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Normal draw for Brownian increment (mode k, step j) under a path seed.
inline double normal_for(std::uint64_t seed, std::uint64_t mode, std::uint64_t step) {
  return standard_normal(derive_seed(seed, mode, step));
}

}  // namespace pmel
