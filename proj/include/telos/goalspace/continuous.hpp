#pragma once

#include <random>
#include <vector>

#include "telos/blockworld/geometry.hpp"
#include "telos/goalspace/classes.hpp"
#include "telos/goalspace/rewards.hpp"
#include "telos/numcore/init.hpp"

namespace telos::goals {

// Minimum spacing between generated table targets (two block widths).
inline double target_separation(const WorldGeometry& g) { return 2.0 * g.block_size; }

inline Vec3 random_table_point(const WorldGeometry& g, std::mt19937_64& rng) {
  const double m = g.block_size;
  return {num::uniform(rng, g.x_min + m, g.x_max - m), num::uniform(rng, g.y_min + m, g.y_max - m), g.rest_z()};
}

// Targets for a continuous class: a column of k random objects (bottom first)
// at a random table spot, remaining objects at well-separated table spots.
inline ContinuousGoal generate_positions(ClassId cls, std::mt19937_64& rng, const WorldGeometry& g = {}) {
  const std::size_t stack = continuous_stack_size(cls);
  std::array<std::size_t, kNumObjects> order{0, 1, 2, 3, 4};
  for (std::size_t i = kNumObjects; i > 1; --i) std::swap(order[i - 1], order[num::uniform_index(rng, i)]);
  const double sep = target_separation(g);
  for (;;) {
    ContinuousGoal goal;
    std::vector<Vec3> footprints;
    const Vec3 column = random_table_point(g, rng);
    if (stack > 0) footprints.push_back(column);
    for (std::size_t m = 0; m < stack; ++m) goal.targets[order[m]] = {column[0], column[1], g.level_z(m)};
    bool ok = true;
    for (std::size_t m = stack; m < kNumObjects && ok; ++m) {
      int tries = 0;
      for (;; ++tries) {
        if (tries > 1000) {
          ok = false;
          break;
        }
        Vec3 p = random_table_point(g, rng);
        bool clear = true;
        for (const auto& f : footprints) clear = clear && horizontal_distance(p, f) >= sep;
        if (clear) {
          footprints.push_back(p);
          goal.targets[order[m]] = p;
          break;
        }
      }
    }
    if (ok) return goal;
  }
}

inline std::vector<ContinuousGoal> sample_continuous_eval_goals(ClassId cls, std::size_t k, std::mt19937_64& rng,
                                                                const WorldGeometry& g = {}) {
  std::vector<ContinuousGoal> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(generate_positions(cls, rng, g));
  return out;
}

}  // namespace telos::goals
