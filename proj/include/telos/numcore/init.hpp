#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "telos/numcore/matrix.hpp"

namespace telos::num {

// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit_uniform(rng); }

// Standard normal via Box-Muller (portable, unlike std::normal_distribution).
inline double standard_normal(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  while (u1 <= 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Uniform integer in [0, n).
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n)) % n;
}

inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Weight of shape (fan_in x fan_out) drawn from U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
inline Matrix xavier_init(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  if (fan_in == 0 || fan_out == 0) throw ShapeError("xavier_init: dimensions must be positive");
  const double bound = xavier_bound(fan_in, fan_out);
  Matrix m(fan_in, fan_out);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = uniform(rng, -bound, bound);
  return m;
}

inline Matrix xavier_init(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return xavier_init(fan_in, fan_out, rng);
}

}  // namespace telos::num
