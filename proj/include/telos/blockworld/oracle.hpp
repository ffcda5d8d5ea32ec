#pragma once

#include <algorithm>
#include <deque>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "telos/blockworld/world.hpp"
#include "telos/goalspace/reachable.hpp"
#include "telos/goalspace/rewards.hpp"

// Scripted pick-and-place controller used as a feasibility oracle: it turns a
// goal into target block positions and executes them with the same action
// interface as a learned policy.
namespace telos::world {

namespace detail {

struct Layout {
  std::array<int, kNumObjects> level{};
  std::array<std::uint32_t, kNumObjects> supports{};
  std::array<int, kNumObjects> column{};  // column id per object
  int columns = 0;
};

inline std::optional<Layout> semantic_layout(goals::SemanticConfiguration goal) {
  if (!goals::reachable_filter(goal)) return std::nullopt;
  Layout L;
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (i != j && goal.above(i, j)) L.supports[i] |= 1u << j;
    }
  }
  // Levels, bottom up; two supports must sit at the same level.
  std::array<bool, kNumObjects> done{};
  for (std::size_t round = 0; round < kNumObjects; ++round) {
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      if (done[i]) continue;
      int lv = 0;
      int first = -1;
      bool ready = true;
      for (std::size_t j = 0; j < kNumObjects; ++j) {
        if (!((L.supports[i] >> j) & 1u)) continue;
        if (!done[j]) {
          ready = false;
          break;
        }
        if (first >= 0 && L.level[j] != first) return std::nullopt;
        first = L.level[j];
        lv = L.level[j] + 1;
      }
      if (ready) {
        L.level[i] = lv;
        done[i] = true;
      }
    }
  }
  // Columns: an object on a single support shares its support's column.
  L.column.fill(-1);
  for (int lv = 0; lv < static_cast<int>(kNumObjects); ++lv) {
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      if (L.level[i] != lv) continue;
      if (std::popcount(L.supports[i]) == 1) {
        L.column[i] = L.column[static_cast<std::size_t>(std::countr_zero(L.supports[i]))];
      } else {
        L.column[i] = L.columns++;
      }
    }
  }
  return L;
}

}  // namespace detail

// Concrete positions whose predicates equal `goal` exactly, preferring to keep
// blocks where they are in `current`. Rejection sampling over cluster
// placements; nullopt when no layout is found.
inline std::optional<goals::ObjectPositions> realize(goals::SemanticConfiguration goal, const WorldState& current,
                                                     std::mt19937_64& rng, const DynamicsParams& p = {},
                                                     int attempts = 4000) {
  const auto layout = detail::semantic_layout(goal);
  if (!layout) return std::nullopt;
  const auto& L = *layout;
  const WorldGeometry& g = p.geometry;
  const double s = g.block_size;
  const goals::PredicateThresholds th = goals::PredicateThresholds::for_geometry(g);
  // Pyramid constraints: column of the top sits between two adjacent columns.
  struct Pyr {
    int top, a, b;
  };
  std::vector<Pyr> pyramids;
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    if (std::popcount(L.supports[i]) == 2) {
      const auto a = static_cast<std::size_t>(std::countr_zero(L.supports[i]));
      const auto b = static_cast<std::size_t>(31 - std::countl_zero(L.supports[i]));
      pyramids.push_back({L.column[i], L.column[a], L.column[b]});
    }
  }
  // Ground object of each column (level-0 object, if any) for anchoring.
  std::vector<int> ground(static_cast<std::size_t>(L.columns), -1);
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    if (L.level[i] == 0) ground[static_cast<std::size_t>(L.column[i])] = static_cast<int>(i);
  }
  // Columns that must be close to each other through some pair of objects.
  std::vector<std::uint32_t> near(static_cast<std::size_t>(L.columns), 0);
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (i != j && L.column[i] != L.column[j] && goal.close(i, j)) {
        near[static_cast<std::size_t>(L.column[i])] |= 1u << L.column[j];
      }
    }
  }
  for (int attempt = 0; attempt < attempts; ++attempt) {
    std::vector<std::optional<std::array<double, 2>>> col(static_cast<std::size_t>(L.columns));
    const bool keep = attempt < attempts / 2;
    auto propagate = [&] {
      for (bool changed = true; changed;) {
        changed = false;
        for (const auto& pr : pyramids) {
          auto& ca = col[static_cast<std::size_t>(pr.a)];
          auto& cb = col[static_cast<std::size_t>(pr.b)];
          auto& ct = col[static_cast<std::size_t>(pr.top)];
          auto beside = [&](const std::array<double, 2>& o) {
            const auto dir = num::uniform_index(rng, 4);
            return std::array<double, 2>{o[0] + (dir == 0 ? s : dir == 1 ? -s : 0.0),
                                         o[1] + (dir == 2 ? s : dir == 3 ? -s : 0.0)};
          };
          if (ca && !cb) {
            cb = beside(*ca);
            changed = true;
          } else if (cb && !ca) {
            ca = beside(*cb);
            changed = true;
          }
          if (ca && cb && !ct) {
            ct = std::array<double, 2>{0.5 * ((*ca)[0] + (*cb)[0]), 0.5 * ((*ca)[1] + (*cb)[1])};
            changed = true;
          }
        }
      }
    };
    for (;;) {
      // Next anchor column: prefer one with an already placed close neighbour.
      int pick = -1;
      int anchor_neighbour = -1;
      for (int c = 0; c < L.columns && anchor_neighbour < 0; ++c) {
        if (col[static_cast<std::size_t>(c)] || ground[static_cast<std::size_t>(c)] < 0) continue;
        if (pick < 0) pick = c;
        for (int d = 0; d < L.columns; ++d) {
          if (((near[static_cast<std::size_t>(c)] >> d) & 1u) && col[static_cast<std::size_t>(d)]) {
            pick = c;
            anchor_neighbour = d;
            break;
          }
        }
      }
      if (pick < 0) break;
      std::array<double, 2> xy;
      const auto& cur = current.objects[static_cast<std::size_t>(ground[static_cast<std::size_t>(pick)])].pos;
      if (anchor_neighbour >= 0) {
        const auto& base = *col[static_cast<std::size_t>(anchor_neighbour)];
        const double r = num::uniform(rng, 1.02 * s, 2.3 * s), ang = num::uniform(rng, 0.0, 2 * M_PI);
        xy = {base[0] + r * std::cos(ang), base[1] + r * std::sin(ang)};
      } else if (keep && num::unit_uniform(rng) < 0.7 && std::abs(cur[2] - g.rest_z()) < 1e-6) {
        xy = {cur[0], cur[1]};
      } else {
        const auto t = random_table_spot(rng, g);
        xy = {t[0], t[1]};
      }
      col[static_cast<std::size_t>(pick)] = xy;
      propagate();
    }
    bool complete = true;
    for (const auto& c : col) complete = complete && c.has_value();
    if (!complete) continue;
    goals::ObjectPositions pos;
    bool inside = true;
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      const auto& c = *col[static_cast<std::size_t>(L.column[i])];
      pos[i] = {c[0], c[1], g.level_z(static_cast<std::size_t>(L.level[i]))};
      inside = inside && c[0] >= g.x_min + 0.5 * s && c[0] <= g.x_max - 0.5 * s && c[1] >= g.y_min + 0.5 * s &&
               c[1] <= g.y_max - 0.5 * s;
    }
    if (!inside || goals::eval_predicates(pos, th) != goal) continue;
    WorldState probe;
    for (std::size_t i = 0; i < kNumObjects; ++i) probe.objects[i].pos = pos[i];
    if (any_overlap(probe, s)) continue;
    return pos;
  }
  return std::nullopt;
}

// Step-by-step pick-and-place controller toward fixed target positions.
class ScriptedOracle {
 public:
  ScriptedOracle(goals::ObjectPositions targets, DynamicsParams p = {}) : targets_(targets), p_(p) {}

  const goals::ObjectPositions& targets() const { return targets_; }

  Action act(const WorldState& st) {
    if (queue_.empty()) plan(st);
    if (queue_.empty()) return {0, 0, 0, 0};
    Waypoint& w = queue_.front();
    Action a{0, 0, 0, w.grip};
    const Vec3 d = w.pos - st.gripper_pos;
    bool arrived = true;
    for (int k = 0; k < 3; ++k) {
      a[static_cast<std::size_t>(k)] = std::clamp(d[static_cast<std::size_t>(k)] / p_.max_step, -1.0, 1.0);
      arrived = arrived && std::abs(d[static_cast<std::size_t>(k)]) <= p_.max_step;
    }
    if (arrived && --w.ticks <= 0) queue_.pop_front();
    return a;
  }

  bool finished(const WorldState& st) const { return next_block(st) < 0 && !st.held; }

 private:
  struct Waypoint {
    Vec3 pos;
    double grip;  // aperture command held while travelling
    int ticks;    // ticks to spend once the waypoint is in reach
  };

  bool at_target(const WorldState& st, std::size_t i) const {
    return distance(st.objects[i].pos, targets_[i]) < 1e-6;
  }

  // A block is settled when it and everything beneath it in its target are in place.
  bool settled(const WorldState& st, std::size_t i) const {
    if (!at_target(st, i)) return false;
    const double s = p_.geometry.block_size;
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (j != i && std::abs(targets_[j][2] - targets_[i][2] + s) < 1e-6 &&
          detail::footprints_overlap(targets_[i], targets_[j], s) && !settled(st, j)) {
        return false;
      }
    }
    return true;
  }

  int next_block(const WorldState& st) const {
    int best = -1;
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      if (settled(st, i)) continue;
      if (best < 0 || targets_[i][2] < targets_[static_cast<std::size_t>(best)][2] - 1e-9) best = static_cast<int>(i);
    }
    return best;
  }

  std::size_t topmost(const WorldState& st, std::size_t i) const {
    const double s = p_.geometry.block_size;
    for (int guard = 0; guard < 8; ++guard) {
      const auto up = detail::resting_on(st, i, s);
      if (up.empty()) return i;
      i = up[0];
    }
    return i;
  }

  Vec3 parking_spot(const WorldState& st, std::size_t moving) const {
    const WorldGeometry& g = p_.geometry;
    const double s = g.block_size;
    const double clear = s + 0.02;
    std::optional<Vec3> best;
    double best_d = INFINITY;
    for (double x = g.x_min + s; x <= g.x_max - s + 1e-9; x += 0.5 * s) {
      for (double y = g.y_min + s; y <= g.y_max - s + 1e-9; y += 0.5 * s) {
        const Vec3 c{x, y, g.rest_z()};
        bool ok = true;
        for (std::size_t j = 0; j < kNumObjects && ok; ++j) {
          const auto& t = targets_[j];
          ok = std::max(std::abs(c[0] - t[0]), std::abs(c[1] - t[1])) >= clear;
          if (ok && j != moving) {
            const auto& q = st.objects[j].pos;
            ok = std::max(std::abs(c[0] - q[0]), std::abs(c[1] - q[1])) >= clear;
          }
        }
        const double d = horizontal_distance(c, st.objects[moving].pos);
        if (ok && d < best_d) {
          best = c;
          best_d = d;
        }
      }
    }
    return best ? *best : st.objects[moving].pos;
  }

  void push_move(const WorldState& st, std::size_t block, const Vec3& dest) {
    const WorldGeometry& g = p_.geometry;
    double highest = g.rest_z();
    for (const auto& o : st.objects) highest = std::max(highest, o.pos[2]);
    const double travel = std::min(g.gripper_z_max, std::max(highest, dest[2]) + g.block_size + 0.01);
    const Vec3 from = st.objects[block].pos;
    queue_.push_back({{from[0], from[1], travel}, 1.0, 1});
    queue_.push_back({from, 1.0, 1});
    queue_.push_back({from, -1.0, 2});
    queue_.push_back({{from[0], from[1], travel}, -1.0, 1});
    queue_.push_back({{dest[0], dest[1], travel}, -1.0, 1});
    queue_.push_back({dest, 0.0, 1});
    queue_.push_back({dest, 1.0, 1});
    queue_.push_back({{dest[0], dest[1], travel}, 1.0, 1});
  }

  void plan(const WorldState& st) {
    const int next = next_block(st);
    if (next < 0) return;
    const auto i = static_cast<std::size_t>(next);
    const double s = p_.geometry.block_size;
    // Something on the block: park the top of its stack first.
    const std::size_t top = topmost(st, i);
    if (top != i) {
      push_move(st, top, parking_spot(st, top));
      return;
    }
    // Target spot taken by another block: park the top of that stack.
    for (std::size_t j = 0; j < kNumObjects; ++j) {
      if (j == i) continue;
      const auto& q = st.objects[j].pos;
      if (detail::footprints_overlap(q, targets_[i], s) && q[2] > targets_[i][2] - s + 1e-6) {
        const std::size_t t = topmost(st, j);
        push_move(st, t, parking_spot(st, t));
        return;
      }
    }
    push_move(st, i, targets_[i]);
  }

  goals::ObjectPositions targets_;
  DynamicsParams p_;
  std::deque<Waypoint> queue_;
};

struct OracleRun {
  bool success = false;
  std::size_t steps = 0;
  WorldState final_state;
};

// Runs the oracle from `start` until the goal predicate holds or the step cap.
template <class SuccessFn>
OracleRun run_oracle(ScriptedOracle& oracle, WorldState start, SuccessFn&& success, std::size_t max_steps,
                     const DynamicsParams& p = {}) {
  OracleRun r;
  r.final_state = std::move(start);
  for (; r.steps < max_steps; ++r.steps) {
    if (success(r.final_state)) {
      r.success = true;
      return r;
    }
    r.final_state = step(r.final_state, oracle.act(r.final_state), p);
  }
  r.success = success(r.final_state);
  return r;
}

}  // namespace telos::world
