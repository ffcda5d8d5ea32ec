#pragma once

#include <array>
#include <cmath>

#include "telos/blockworld/geometry.hpp"
#include "telos/goalspace/semantic.hpp"

namespace telos::goals {

using ObjectPositions = std::array<Vec3, kNumObjects>;

struct PredicateThresholds {
  double block_size = 0.05;
  double close_distance = 0.125;   // 2.5 block sizes
  double above_z_tolerance = 0.01;
  double above_xy_tolerance = 0.03;

  static PredicateThresholds for_geometry(const WorldGeometry& g) {
    PredicateThresholds t;
    t.block_size = g.block_size;
    t.close_distance = 2.5 * g.block_size;
    t.above_xy_tolerance = 0.6 * g.block_size;
    return t;
  }
};

inline bool is_close(const Vec3& a, const Vec3& b, const PredicateThresholds& th) {
  return distance(a, b) < th.close_distance;
}

// "Directly above": resting one block height higher, horizontally aligned.
inline bool is_above(const Vec3& top, const Vec3& bottom, const PredicateThresholds& th) {
  return std::abs(top[2] - bottom[2] - th.block_size) < th.above_z_tolerance &&
         horizontal_distance(top, bottom) < th.above_xy_tolerance;
}

inline SemanticConfiguration eval_predicates(const ObjectPositions& pos, const PredicateThresholds& th = {}) {
  SemanticConfiguration c;
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (i == j) continue;
      if (i < j && is_close(pos[i], pos[j], th)) c.set_close(i, j);
      if (is_above(pos[i], pos[j], th)) c.set_above(i, j);
    }
  }
  return c;
}

}  // namespace telos::goals
