#pragma once

#include <random>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "telos/goalspace/goal.hpp"
#include "telos/numcore/init.hpp"
#include "telos/replay/replay.hpp"

namespace telos::autotelic {

using goals::SemanticConfiguration;

// Semantic configurations met at the end of past episodes, in discovery order.
class DiscoveredGoals {
 public:
  bool contains(SemanticConfiguration c) const { return seen_.count(c.bits()) != 0; }
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  const std::vector<SemanticConfiguration>& list() const { return order_; }

  bool insert(SemanticConfiguration c) {
    if (!seen_.insert(c.bits()).second) return false;
    order_.push_back(c);
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (auto c : order_) j.push_back(c.hex());
    return j;
  }

  static DiscoveredGoals from_json(const nlohmann::json& j) {
    DiscoveredGoals d;
    for (const auto& h : j) d.insert(SemanticConfiguration::from_hex(h.get<std::string>()));
    return d;
  }

 private:
  std::vector<SemanticConfiguration> order_;
  std::unordered_set<std::uint32_t> seen_;
};

// n goals drawn uniformly with replacement; all-zero goals while nothing is known.
inline std::vector<SemanticConfiguration> sample_goals(const DiscoveredGoals& d, std::size_t n, std::mt19937_64& rng) {
  std::vector<SemanticConfiguration> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(d.empty() ? SemanticConfiguration{} : d.list()[num::uniform_index(rng, d.size())]);
  }
  return out;
}

// Appends the final achieved configuration of each trajectory if unseen.
// Held-out configurations never become goals. Returns the number added.
inline std::size_t update_goals(const std::vector<replay::Episode>& trajectories, DiscoveredGoals& d,
                                const goals::HeldOut& heldout = {}) {
  std::size_t added = 0;
  for (const auto& ep : trajectories) {
    if (ep.mode != goals::GoalMode::semantic || ep.achieved.empty()) continue;
    const auto last = ep.achieved.back().config;
    if (heldout && heldout(last)) continue;
    added += d.insert(last);
  }
  return added;
}

}  // namespace telos::autotelic
