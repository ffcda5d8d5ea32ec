#pragma once

#include <array>

#include "telos/goalspace/predicates.hpp"
#include "telos/goalspace/semantic.hpp"

namespace telos::goals {

// Per-object self-reward: the count of objects whose goal constraints hold.
struct ObjectReward {
  std::array<bool, kNumObjects> per_object{};
  int reward = 0;
  bool success = false;
};

// Target positions, one per object.
struct ContinuousGoal {
  ObjectPositions targets{};
  friend bool operator==(const ContinuousGoal&, const ContinuousGoal&) = default;
};

inline constexpr double kDefaultPositionTolerance = 0.05;

// Object i is correct when every goal entry that mentions i matches.
inline ObjectReward semantic_reward(SemanticConfiguration achieved, SemanticConfiguration goal) {
  const std::uint32_t mismatch = achieved.bits() ^ goal.bits();
  ObjectReward r;
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    r.per_object[i] = (mismatch & kObjectMasks[i]) == 0;
    r.reward += r.per_object[i] ? 1 : 0;
  }
  r.success = mismatch == 0;
  return r;
}

inline ObjectReward continuous_reward(const ObjectPositions& positions, const ContinuousGoal& goal,
                                      double tolerance = kDefaultPositionTolerance) {
  ObjectReward r;
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    r.per_object[i] = distance(positions[i], goal.targets[i]) < tolerance;
    r.reward += r.per_object[i] ? 1 : 0;
  }
  r.success = r.reward == static_cast<int>(kNumObjects);
  return r;
}

}  // namespace telos::goals
