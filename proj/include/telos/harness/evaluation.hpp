#pragma once

#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "telos/blockworld/world.hpp"
#include "telos/goalspace/classes.hpp"
#include "telos/goalspace/continuous.hpp"
#include "telos/replay/replay.hpp"
#include "telos/sac/sac.hpp"

namespace telos::harness {

using goals::ClassId;

inline std::vector<ClassId> default_classes(goals::GoalMode mode) {
  if (mode == goals::GoalMode::semantic) return {goals::kSemanticClasses.begin(), goals::kSemanticClasses.end()};
  return {goals::kContinuousClasses.begin(), goals::kContinuousClasses.end()};
}

inline std::vector<goals::Goal> eval_goals(ClassId cls, std::size_t k, std::mt19937_64& rng,
                                           const world::DynamicsParams& dyn = {}) {
  std::vector<goals::Goal> out;
  if (goals::is_semantic(cls)) {
    for (auto c : goals::sample_semantic_eval_goals(cls, k, rng)) out.push_back(goals::Goal::semantic(c));
  } else {
    for (const auto& g : goals::sample_continuous_eval_goals(cls, k, rng, dyn.geometry)) out.push_back(goals::Goal::continuous(g));
  }
  return out;
}

struct Evaluation {
  std::vector<ClassId> classes;
  std::vector<double> sr;  // per class, in `classes` order
  std::size_t goals = 0;
  double global_sr() const {
    double s = 0;
    for (double v : sr) s += v;
    return sr.empty() ? 0.0 : s / static_cast<double>(sr.size());
  }
};

// Actions for the live episodes of a lockstep batch; `ids` are episode indices.
using BatchPolicy = std::function<std::vector<world::Action>(const std::vector<const world::WorldState*>& states,
                                                             const std::vector<const goals::Goal*>& goals,
                                                             const std::vector<std::size_t>& ids)>;

// k goals per class from unbiased resets; an episode succeeds, and stops, once
// its goal holds.
inline Evaluation evaluate_policy(const BatchPolicy& policy, const std::vector<ClassId>& classes, std::size_t k,
                                  std::uint64_t seed, std::size_t length = world::kEpisodeLength,
                                  const world::DynamicsParams& dyn = {}) {
  if (classes.empty()) throw std::invalid_argument("evaluate: no classes");
  const bool semantic = goals::is_semantic(classes.front());
  for (auto c : classes) {
    if (goals::is_semantic(c) != semantic) throw std::invalid_argument("evaluate: classes mix goal modes");
  }
  const auto mode = semantic ? goals::GoalMode::semantic : goals::GoalMode::continuous;
  std::mt19937_64 rng(seed);
  std::vector<goals::Goal> goal_list;
  std::vector<world::WorldState> states;
  for (auto c : classes) {
    for (const auto& g : eval_goals(c, k, rng, dyn)) {
      goal_list.push_back(g);
      states.push_back(world::reset(rng, 0.0, dyn));
    }
  }
  const std::size_t n = states.size();
  std::vector<bool> done(n, false);
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<const world::WorldState*> live_states;
    std::vector<const goals::Goal*> live_goals;
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      live_states.push_back(&states[i]);
      live_goals.push_back(&goal_list[i]);
      ids.push_back(i);
    }
    if (ids.empty()) break;
    const auto actions = policy(live_states, live_goals, ids);
    for (std::size_t k2 = 0; k2 < ids.size(); ++k2) {
      const std::size_t i = ids[k2];
      states[i] = world::step(states[i], actions[k2], dyn);
      done[i] = goals::goal_reward(goals::achieved_goal(mode, world::positions(states[i])), goal_list[i]).success;
    }
  }
  Evaluation e;
  e.classes = classes;
  e.goals = n;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < k; ++i) ok += done[c * k + i];
    e.sr.push_back(static_cast<double>(ok) / static_cast<double>(k));
  }
  return e;
}

// The deterministic policy of `nets`; reads the nets only.
inline BatchPolicy deterministic_policy(const sac::AgentNets& nets) {
  return [&nets](const std::vector<const world::WorldState*>& states, const std::vector<const goals::Goal*>& goals,
                 const std::vector<std::size_t>&) {
    std::vector<std::vector<double>> obs;
    obs.reserve(states.size());
    for (const auto* s : states) obs.push_back(replay::flatten(world::observe(*s)));
    std::vector<const std::vector<double>*> ptrs;
    for (const auto& o : obs) ptrs.push_back(&o);
    std::mt19937_64 unused(0);
    return sac::act(nets, sac::observation_graphs(ptrs, goals), true, unused);
  };
}

inline Evaluation evaluate(const sac::AgentNets& nets, const std::vector<ClassId>& classes, std::size_t k,
                           std::uint64_t seed, std::size_t length = world::kEpisodeLength,
                           const world::DynamicsParams& dyn = {}) {
  return evaluate_policy(deterministic_policy(nets), classes, k, seed, length, dyn);
}

}  // namespace telos::harness
