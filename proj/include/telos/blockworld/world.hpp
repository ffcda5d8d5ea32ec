#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "telos/blockworld/geometry.hpp"
#include "telos/goalspace/predicates.hpp"
#include "telos/numcore/init.hpp"

namespace telos::world {

struct DynamicsParams {
  double grasp_radius = 0.05;
  double max_step = 0.05;        // gripper travel per tick and axis at full command
  double aperture_rate = 0.5;    // aperture change per tick at full command
  double spawn_separation = 0.125;  // minimum spacing of table blocks at reset
  double gripper_start_z = 0.6;
  WorldGeometry geometry;
};

struct ObjectState {
  Vec3 pos{};
  Vec3 orient{};
  Vec3 vel{};
  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

struct WorldState {
  Vec3 gripper_pos{};
  double gripper_aperture = 1.0;
  Vec3 gripper_vel{};
  std::optional<std::size_t> held;
  std::optional<std::size_t> carried;  // block riding on the held block
  std::array<ObjectState, kNumObjects> objects{};
  friend bool operator==(const WorldState&, const WorldState&) = default;
};

// dx, dy, dz scale commands and the gripper command, each in [-1, 1].
using Action = std::array<double, 4>;

inline constexpr std::size_t kBodyWidth = 8;
inline constexpr std::size_t kObjectWidth = 9;
inline constexpr std::size_t kEpisodeLength = 200;

inline Action clamp_action(Action a) {
  for (auto& v : a) v = std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : 0.0;
  return a;
}

inline goals::ObjectPositions positions(const WorldState& s) {
  goals::ObjectPositions p;
  for (std::size_t i = 0; i < kNumObjects; ++i) p[i] = s.objects[i].pos;
  return p;
}

inline goals::SemanticConfiguration achieved(const WorldState& s, const goals::PredicateThresholds& th = {}) {
  return goals::eval_predicates(positions(s), th);
}

namespace detail {

inline constexpr double kEps = 1e-9;

// Horizontal footprints of two axis-aligned blocks intersect.
inline bool footprints_overlap(const Vec3& a, const Vec3& b, double s) {
  return std::abs(a[0] - b[0]) < s - kEps && std::abs(a[1] - b[1]) < s - kEps;
}

inline bool rests_on(const Vec3& top, const Vec3& bottom, double s) {
  return std::abs(top[2] - bottom[2] - s) < 1e-6 && footprints_overlap(top, bottom, s);
}

inline std::vector<std::size_t> resting_on(const WorldState& st, std::size_t i, double s) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < kNumObjects; ++j) {
    if (j != i && rests_on(st.objects[j].pos, st.objects[i].pos, s)) out.push_back(j);
  }
  return out;
}

inline void clamp_to_table(Vec3& p, const WorldGeometry& g) {
  p[0] = std::clamp(p[0], g.x_min, g.x_max);
  p[1] = std::clamp(p[1], g.y_min, g.y_max);
}

inline bool spot_is_free(const WorldState& st, std::size_t i, const Vec3& p, double s) {
  for (std::size_t j = 0; j < kNumObjects; ++j) {
    if (j != i && footprints_overlap(p, st.objects[j].pos, s)) return false;
  }
  return true;
}

// Nearest free table spot on a half-block grid around p.
inline Vec3 nearest_free_table_spot(const WorldState& st, std::size_t i, Vec3 p, const WorldGeometry& g) {
  const double s = g.block_size;
  for (int ring = 1; ring < 64; ++ring) {
    std::optional<Vec3> best;
    double best_d = INFINITY;
    for (int dx = -ring; dx <= ring; ++dx) {
      for (int dy = -ring; dy <= ring; ++dy) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        Vec3 c{p[0] + 0.5 * s * dx, p[1] + 0.5 * s * dy, g.rest_z()};
        if (c[0] < g.x_min || c[0] > g.x_max || c[1] < g.y_min || c[1] > g.y_max) continue;
        const double d = horizontal_distance(c, p);
        if (d < best_d && spot_is_free(st, i, c, s)) {
          best = c;
          best_d = d;
        }
      }
    }
    if (best) return *best;
  }
  return {p[0], p[1], g.rest_z()};
}

// Drops block i from its current (x, y) onto the highest block whose
// footprint it overlaps, or onto the table. Resting is stable when the block
// is within half a block of one support, or centered between two supports
// (pyramid); otherwise it slides off the nearest support's edge and retries.
inline void settle(WorldState& st, std::size_t i, const WorldGeometry& g) {
  const double s = g.block_size;
  Vec3 p = st.objects[i].pos;
  clamp_to_table(p, g);
  for (int attempt = 0; attempt < 16; ++attempt) {
    double top = -INFINITY;
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (j != i && footprints_overlap(p, st.objects[j].pos, s)) top = std::max(top, st.objects[j].pos[2]);
    }
    if (top == -INFINITY) {
      st.objects[i].pos = {p[0], p[1], g.rest_z()};
      return;
    }
    std::vector<std::size_t> supports;
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (j != i && footprints_overlap(p, st.objects[j].pos, s) && st.objects[j].pos[2] > top - 1e-6) {
        supports.push_back(j);
      }
    }
    bool stable = false;
    std::size_t nearest = supports[0];
    for (std::size_t j : supports) {
      const double d = horizontal_distance(p, st.objects[j].pos);
      if (d <= 0.5 * s + kEps) stable = true;
      if (d < horizontal_distance(p, st.objects[nearest].pos)) nearest = j;
    }
    for (std::size_t a = 0; a < supports.size() && !stable; ++a) {
      for (std::size_t b = a + 1; b < supports.size() && !stable; ++b) {
        const Vec3 mid = 0.5 * (st.objects[supports[a]].pos + st.objects[supports[b]].pos);
        stable = horizontal_distance(p, mid) <= 0.5 * s + kEps;
      }
    }
    if (stable) {
      // Snap to the support height exactly so stacked levels stay aligned.
      st.objects[i].pos = {p[0], p[1], top + s};
      return;
    }
    const Vec3& q = st.objects[nearest].pos;
    const double dx = p[0] - q[0], dy = p[1] - q[1];
    if (std::abs(dx) >= std::abs(dy)) {
      p[0] = q[0] + (dx >= 0 ? s : -s);
    } else {
      p[1] = q[1] + (dy >= 0 ? s : -s);
    }
    clamp_to_table(p, g);
  }
  st.objects[i].pos = nearest_free_table_spot(st, i, p, g);
}

}  // namespace detail

inline Vec3 random_table_spot(std::mt19937_64& rng, const WorldGeometry& g) {
  const double m = g.block_size;
  return {num::uniform(rng, g.x_min + m, g.x_max - m), num::uniform(rng, g.y_min + m, g.y_max - m), g.rest_z()};
}

// Blocks on the table at least spawn_separation apart, so none start close or
// stacked. With probability biased_init_prob a random stack of 2..5 random
// blocks is built at one of the spots instead.
inline WorldState reset(std::mt19937_64& rng, double biased_init_prob, const DynamicsParams& p = {}) {
  const WorldGeometry& g = p.geometry;
  WorldState st;
  st.gripper_pos = {0.0, 0.0, p.gripper_start_z};
  st.gripper_aperture = 1.0;
  std::array<std::size_t, kNumObjects> order{0, 1, 2, 3, 4};
  for (std::size_t i = kNumObjects; i > 1; --i) std::swap(order[i - 1], order[num::uniform_index(rng, i)]);
  std::size_t stack = 0;
  if (num::unit_uniform(rng) < biased_init_prob) stack = 2 + num::uniform_index(rng, kNumObjects - 1);
  std::vector<Vec3> spots;
  while (spots.size() < kNumObjects - (stack > 0 ? stack - 1 : 0)) {
    const Vec3 c = random_table_spot(rng, g);
    bool ok = true;
    for (const auto& o : spots) ok = ok && horizontal_distance(c, o) >= p.spawn_separation;
    if (ok) spots.push_back(c);
  }
  std::size_t next_spot = 0;
  for (std::size_t m = 0; m < kNumObjects; ++m) {
    if (stack > 0 && m < stack) {
      st.objects[order[m]].pos = {spots[0][0], spots[0][1], g.level_z(m)};
      if (m + 1 == stack) next_spot = 1;
    } else {
      st.objects[order[m]].pos = spots[next_spot++];
    }
  }
  return st;
}

inline WorldState step(const WorldState& prev, Action action, const DynamicsParams& p = {}) {
  const WorldGeometry& g = p.geometry;
  const double s = g.block_size;
  const Action a = clamp_action(action);
  WorldState st = prev;
  st.gripper_pos = prev.gripper_pos + p.max_step * Vec3{a[0], a[1], a[2]};
  st.gripper_pos[0] = std::clamp(st.gripper_pos[0], g.x_min, g.x_max);
  st.gripper_pos[1] = std::clamp(st.gripper_pos[1], g.y_min, g.y_max);
  st.gripper_pos[2] = std::clamp(st.gripper_pos[2], g.rest_z(), g.gripper_z_max);
  st.gripper_aperture = std::clamp(prev.gripper_aperture + a[3] * p.aperture_rate, 0.0, 1.0);

  auto carry_to_gripper = [&] {
    const Vec3 delta = st.gripper_pos - st.objects[*st.held].pos;
    st.objects[*st.held].pos = st.gripper_pos;
    if (st.carried) st.objects[*st.carried].pos = st.objects[*st.carried].pos + delta;
  };

  if (st.held) {
    carry_to_gripper();
    if (st.gripper_aperture >= 0.5) {
      const std::size_t h = *st.held;
      const auto c = st.carried;
      st.held.reset();
      st.carried.reset();
      if (c) st.objects[*c].pos = {1e9, 1e9, 0.0};  // out of the way while h lands
      detail::settle(st, h, g);
      if (c) {
        // The rider keeps its offset and lands on the block that carried it.
        const Vec3 offset = prev.objects[*c].pos - prev.objects[h].pos;
        st.objects[*c].pos = st.objects[h].pos + offset;
        st.objects[*c].pos[2] = st.objects[h].pos[2] + s;
        detail::settle(st, *c, g);
      }
    }
  } else if (a[3] < 0.0 && st.gripper_aperture < 0.5) {
    std::optional<std::size_t> nearest;
    double best = p.grasp_radius;
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      const double d = distance(st.objects[i].pos, st.gripper_pos);
      if (d <= best) {
        best = d;
        nearest = i;
      }
    }
    if (nearest) {
      // A block may carry exactly one block resting on it, and no more.
      const auto on_top = detail::resting_on(st, *nearest, s);
      const bool liftable = on_top.size() == 0 || (on_top.size() == 1 && detail::resting_on(st, on_top[0], s).empty());
      if (liftable) {
        st.held = nearest;
        if (on_top.size() == 1) st.carried = on_top[0];
        carry_to_gripper();
      }
    }
  }
  st.gripper_vel = st.gripper_pos - prev.gripper_pos;
  for (std::size_t i = 0; i < kNumObjects; ++i) st.objects[i].vel = st.objects[i].pos - prev.objects[i].pos;
  return st;
}

struct Observation {
  std::vector<double> body;                  // gripper pos, aperture, gripper vel, held flag
  std::vector<std::vector<double>> objects;  // per block: pos, orient, vel
};

inline Observation observe(const WorldState& st) {
  Observation o;
  o.body.reserve(kBodyWidth);
  o.body.insert(o.body.end(), st.gripper_pos.begin(), st.gripper_pos.end());
  o.body.push_back(st.gripper_aperture);
  o.body.insert(o.body.end(), st.gripper_vel.begin(), st.gripper_vel.end());
  o.body.push_back(st.held ? 1.0 : 0.0);
  o.objects.resize(kNumObjects);
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    auto& v = o.objects[i];
    const auto& ob = st.objects[i];
    v.reserve(kObjectWidth);
    v.insert(v.end(), ob.pos.begin(), ob.pos.end());
    v.insert(v.end(), ob.orient.begin(), ob.orient.end());
    v.insert(v.end(), ob.vel.begin(), ob.vel.end());
  }
  return o;
}

// Blocks whose volumes intersect: neither horizontally nor vertically apart.
inline bool any_overlap(const WorldState& st, double s) {
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    for (std::size_t j = i + 1; j < kNumObjects; ++j) {
      if (st.held && (i == *st.held || j == *st.held)) continue;
      if (st.carried && (i == *st.carried || j == *st.carried)) continue;
      const auto& a = st.objects[i].pos;
      const auto& b = st.objects[j].pos;
      if (detail::footprints_overlap(a, b, s) && std::abs(a[2] - b[2]) < s - 1e-6) return true;
    }
  }
  return false;
}

}  // namespace telos::world
