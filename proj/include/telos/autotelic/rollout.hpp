#pragma once

#include <random>
#include <vector>

#include "telos/blockworld/world.hpp"
#include "telos/goalspace/goal.hpp"
#include "telos/replay/replay.hpp"
#include "telos/sac/sac.hpp"

namespace telos::autotelic {

using goals::Goal;
using goals::GoalMode;

struct RolloutSpec {
  world::WorldState start;
  Goal goal;
  bool deterministic = false;
};

struct RolloutResult {
  replay::Episode episode;
  bool success = false;  // goal achieved at some step after the start
  std::size_t first_success = 0;
};

struct RolloutOptions {
  std::size_t length = world::kEpisodeLength;
  bool stop_at_success = false;
  double tolerance = goals::kDefaultPositionTolerance;
  world::DynamicsParams dynamics;
};

// Runs all episodes in lockstep, one batched policy evaluation per step.
inline std::vector<RolloutResult> rollout(const sac::AgentNets& nets, const std::vector<RolloutSpec>& specs,
                                          std::mt19937_64& rng, const RolloutOptions& opt = {}) {
  const std::size_t n = specs.size();
  std::vector<RolloutResult> out(n);
  std::vector<world::WorldState> states(n);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    states[i] = specs[i].start;
    out[i].episode.begin(states[i], specs[i].goal.mode, specs[i].goal);
  }
  std::vector<std::size_t> live;
  for (std::size_t t = 0; t < opt.length; ++t) {
    live.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (active[i]) live.push_back(i);
    }
    if (live.empty()) break;
    std::vector<const std::vector<double>*> obs;
    std::vector<const Goal*> goals;
    std::vector<bool> det;
    for (auto i : live) {
      obs.push_back(&out[i].episode.obs.back());
      goals.push_back(&specs[i].goal);
      det.push_back(specs[i].deterministic);
    }
    const auto actions = sac::act(nets, sac::observation_graphs(obs, goals), det, rng);
    for (std::size_t k = 0; k < live.size(); ++k) {
      const std::size_t i = live[k];
      states[i] = world::step(states[i], actions[k], opt.dynamics);
      out[i].episode.push(actions[k], states[i]);
      if (!out[i].success && goals::goal_reward(out[i].episode.achieved.back(), specs[i].goal, opt.tolerance).success) {
        out[i].success = true;
        out[i].first_success = t + 1;
        if (opt.stop_at_success) active[i] = false;
      }
    }
  }
  return out;
}

}  // namespace telos::autotelic
