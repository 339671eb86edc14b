#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, frame, index), so any frame can be regenerated in isolation.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace cpi::rng {

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t frame, std::uint64_t index,
                         std::uint64_t lane) {
  return mix(mix(mix(mix(seed) ^ frame) ^ index) ^ lane);
}

/// Uniform in (0, 1], never zero.
inline double uniform(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Circular complex Gaussian with E|z|^2 = 1.
inline std::complex<double> complex_normal(std::uint64_t seed, std::uint64_t frame,
                                           std::uint64_t index) {
  const double u1 = uniform(key(seed, frame, index, 0));
  const double u2 = uniform(key(seed, frame, index, 1));
  const double r = std::sqrt(-std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace cpi::rng
