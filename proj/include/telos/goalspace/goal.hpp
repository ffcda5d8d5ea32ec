#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "telos/goalspace/predicates.hpp"
#include "telos/goalspace/rewards.hpp"
#include "telos/goalspace/semantic.hpp"

namespace telos::goals {

enum class GoalMode { semantic, continuous };

inline const char* mode_name(GoalMode m) { return m == GoalMode::semantic ? "semantic" : "continuous"; }

inline GoalMode parse_mode(const std::string& s) {
  if (s == "semantic") return GoalMode::semantic;
  if (s == "continuous") return GoalMode::continuous;
  throw std::invalid_argument("unknown goal mode '" + s + "'");
}

// A desired or achieved goal in either representation. Only the field that
// matches `mode` is meaningful.
struct Goal {
  GoalMode mode = GoalMode::semantic;
  SemanticConfiguration config;
  ContinuousGoal targets;

  static Goal semantic(SemanticConfiguration c) { return {GoalMode::semantic, c, {}}; }
  static Goal continuous(const ContinuousGoal& g) { return {GoalMode::continuous, {}, g}; }

  friend bool operator==(const Goal& a, const Goal& b) {
    if (a.mode != b.mode) return false;
    return a.mode == GoalMode::semantic ? a.config == b.config : a.targets == b.targets;
  }
};

// What a scene achieves, in the representation of `mode`.
inline Goal achieved_goal(GoalMode mode, const ObjectPositions& pos, const PredicateThresholds& th = {}) {
  if (mode == GoalMode::semantic) return Goal::semantic(eval_predicates(pos, th));
  ContinuousGoal g;
  g.targets = pos;
  return Goal::continuous(g);
}

inline ObjectReward goal_reward(const Goal& achieved, const Goal& desired,
                                double tolerance = kDefaultPositionTolerance) {
  if (achieved.mode != desired.mode) throw std::invalid_argument("goal_reward: goal modes differ");
  if (desired.mode == GoalMode::semantic) return semantic_reward(achieved.config, desired.config);
  return continuous_reward(achieved.targets.targets, desired.targets, tolerance);
}

using RewardFn = std::function<ObjectReward(const Goal& achieved, const Goal& desired)>;

inline RewardFn default_reward() {
  return [](const Goal& a, const Goal& d) { return goal_reward(a, d); };
}

// Membership test for a held-out goal set; an empty function holds nothing out.
using HeldOut = std::function<bool(SemanticConfiguration)>;

inline bool held_out(const HeldOut& h, const Goal& g) {
  return h && g.mode == GoalMode::semantic && h(g.config);
}

}  // namespace telos::goals
