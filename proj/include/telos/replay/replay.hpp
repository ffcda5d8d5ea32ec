#pragma once

#include <cstdint>
#include <deque>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "telos/blockworld/world.hpp"
#include "telos/goalspace/goal.hpp"
#include "telos/goalspace/reachable.hpp"
#include "telos/numcore/init.hpp"

namespace telos::replay {

using goals::Goal;
using goals::GoalMode;
using world::Action;

inline constexpr std::size_t kObsWidth = world::kBodyWidth + kNumObjects * world::kObjectWidth;

// Body followed by the five object rows.
inline std::vector<double> flatten(const world::Observation& o) {
  std::vector<double> v;
  v.reserve(kObsWidth);
  v.insert(v.end(), o.body.begin(), o.body.end());
  for (const auto& ob : o.objects) v.insert(v.end(), ob.begin(), ob.end());
  if (v.size() != kObsWidth) throw num::ShapeError("flatten: observation width " + std::to_string(v.size()));
  return v;
}

inline goals::ObjectPositions positions_of(const std::vector<double>& obs) {
  goals::ObjectPositions p{};
  for (std::size_t i = 0; i < kNumObjects; ++i) {
    const std::size_t o = world::kBodyWidth + i * world::kObjectWidth;
    p[i] = {obs[o], obs[o + 1], obs[o + 2]};
  }
  return p;
}

// obs and achieved have one more entry than actions: index t is the state
// before action t.
struct Episode {
  GoalMode mode = GoalMode::semantic;
  Goal desired;
  std::vector<std::vector<double>> obs;
  std::vector<Action> actions;
  std::vector<Goal> achieved;

  std::size_t length() const { return actions.size(); }

  void begin(const world::WorldState& st, GoalMode m, const Goal& goal, const goals::PredicateThresholds& th = {}) {
    mode = m;
    desired = goal;
    obs = {flatten(world::observe(st))};
    actions.clear();
    achieved = {goals::achieved_goal(m, world::positions(st), th)};
  }

  void push(const Action& a, const world::WorldState& next, const goals::PredicateThresholds& th = {}) {
    actions.push_back(a);
    obs.push_back(flatten(world::observe(next)));
    achieved.push_back(goals::achieved_goal(mode, world::positions(next), th));
  }
};

// Stored achieved goals agree with the ones recomputed from observations.
inline bool consistent(const Episode& ep, const goals::PredicateThresholds& th = {}) {
  if (ep.obs.size() != ep.length() + 1 || ep.achieved.size() != ep.obs.size()) return false;
  for (std::size_t t = 0; t < ep.obs.size(); ++t) {
    if (!(goals::achieved_goal(ep.mode, positions_of(ep.obs[t]), th) == ep.achieved[t])) return false;
  }
  return true;
}

inline bool touches(const Episode& ep, const goals::HeldOut& heldout) {
  if (!heldout) return false;
  for (const auto& g : ep.achieved) {
    if (goals::held_out(heldout, g)) return true;
  }
  return false;
}

enum class RelabelMode { full, per_object };

struct Transition {
  std::vector<double> obs;
  std::vector<double> next_obs;
  Action action{};
  Goal goal;
  Goal next_achieved;
  goals::ObjectReward reward;
  bool relabeled = false;
  bool per_object = false;
  std::uint64_t episode = 0;  // serial number of the source episode
  std::size_t t = 0;
};

// Goal slice of the objects in `subset` (bitmask over objects) taken from
// `future`, the rest kept from `original`.
inline Goal mix_goal(const Goal& original, const Goal& future, std::uint32_t subset) {
  if (original.mode != future.mode) throw std::invalid_argument("mix_goal: goal modes differ");
  Goal g = original;
  if (g.mode == GoalMode::semantic) {
    std::uint32_t take = 0;
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      if ((subset >> i) & 1u) take |= goals::kObjectMasks[i];
    }
    g.config = goals::SemanticConfiguration((original.config.bits() & ~take) | (future.config.bits() & take));
  } else {
    for (std::size_t i = 0; i < kNumObjects; ++i) {
      if ((subset >> i) & 1u) g.targets.targets[i] = future.targets.targets[i];
    }
  }
  return g;
}

struct RelabelResult {
  Goal goal;
  bool per_object = false;  // false when full, or when a hybrid fell back to full
};

// Per-object relabeling whose hybrid is physically inconsistent or held out
// falls back to the full future goal.
inline RelabelResult mc_relabel(const Goal& original, const Goal& future, RelabelMode mode, std::uint32_t subset,
                                const goals::HeldOut& heldout = {}) {
  constexpr std::uint32_t all = (1u << kNumObjects) - 1;
  if (mode == RelabelMode::full || subset == all) return {future, false};
  if (subset == 0 || subset > all) throw std::invalid_argument("mc_relabel: subset must be a nonempty object set");
  Goal g = mix_goal(original, future, subset);
  if (g.mode == GoalMode::semantic && (!goals::reachable_filter(g.config) || goals::held_out(heldout, g))) {
    return {future, false};
  }
  return {g, true};
}

struct SampleOptions {
  std::size_t batch_size = 256;
  int k_replay = 4;
  double per_object_prob = 0.5;  // given a relabel
  goals::HeldOut heldout;
  goals::RewardFn reward = goals::default_reward();
};

// FIFO store of episodes bounded by a transition count.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1'000'000) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t transitions() const { return transitions_; }
  std::size_t episodes() const { return episodes_.size(); }
  bool empty() const { return episodes_.empty(); }
  std::uint64_t first_serial() const { return next_serial_ - episodes_.size(); }
  std::uint64_t stored_total() const { return next_serial_; }
  const Episode& episode(std::size_t i) const { return episodes_.at(i); }

  void save(std::ostream& os) const;
  static ReplayBuffer load(std::istream& is);

  // Rejects the episode if any of its steps achieves a held-out configuration.
  bool store(Episode ep, const goals::HeldOut& heldout = {}) {
    if (ep.length() == 0) throw std::invalid_argument("store: empty episode");
    if (ep.length() > capacity_) throw std::invalid_argument("store: episode longer than the buffer");
    if (touches(ep, heldout)) return false;
    while (transitions_ + ep.length() > capacity_) {
      transitions_ -= episodes_.front().length();
      episodes_.pop_front();
    }
    transitions_ += ep.length();
    episodes_.push_back(std::move(ep));
    ++next_serial_;
    return true;
  }

  // Episode uniformly, then a step uniformly; with probability k/(k+1) the
  // goal is replaced by the achieved goal of a uniformly chosen later step.
  std::vector<Transition> sample_batch(const SampleOptions& opt, std::mt19937_64& rng) const {
    if (empty()) throw std::logic_error("sample_batch: buffer is empty");
    const double relabel_p = opt.k_replay <= 0 ? 0.0 : static_cast<double>(opt.k_replay) / (opt.k_replay + 1.0);
    std::vector<Transition> out(opt.batch_size);
    const std::uint64_t base = first_serial();
    for (auto& tr : out) {
      const std::size_t e = num::uniform_index(rng, episodes_.size());
      const Episode& ep = episodes_[e];
      const std::size_t t = num::uniform_index(rng, ep.length());
      tr.obs = ep.obs[t];
      tr.next_obs = ep.obs[t + 1];
      tr.action = ep.actions[t];
      tr.next_achieved = ep.achieved[t + 1];
      tr.goal = ep.desired;
      tr.episode = base + e;
      tr.t = t;
      if (num::unit_uniform(rng) < relabel_p) {
        const std::size_t future = t + 1 + num::uniform_index(rng, ep.length() - t);
        const bool mix = num::unit_uniform(rng) < opt.per_object_prob;
        const std::uint32_t subset = 1 + static_cast<std::uint32_t>(num::uniform_index(rng, (1u << kNumObjects) - 1));
        auto r = mc_relabel(ep.desired, ep.achieved[future], mix ? RelabelMode::per_object : RelabelMode::full, subset,
                            opt.heldout);
        tr.goal = r.goal;
        tr.relabeled = true;
        tr.per_object = r.per_object;
      }
      tr.reward = opt.reward(tr.next_achieved, tr.goal);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t transitions_ = 0;
  std::uint64_t next_serial_ = 0;
  std::deque<Episode> episodes_;
};

namespace detail {

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("replay buffer file truncated");
  return v;
}

inline void put_goal(std::ostream& os, const Goal& g) {
  put<std::uint8_t>(os, g.mode == GoalMode::semantic ? 0 : 1);
  put<std::uint32_t>(os, g.config.bits());
  for (const auto& t : g.targets.targets) os.write(reinterpret_cast<const char*>(t.data()), sizeof(double) * 3);
}

inline Goal get_goal(std::istream& is) {
  Goal g;
  g.mode = get<std::uint8_t>(is) == 0 ? GoalMode::semantic : GoalMode::continuous;
  g.config = goals::SemanticConfiguration(get<std::uint32_t>(is));
  for (auto& t : g.targets.targets) {
    for (auto& c : t) c = get<double>(is);
  }
  return g;
}

inline constexpr std::uint32_t kBufferMagic = 0x54524231;  // "TRB1"

}  // namespace detail

// Raw little-endian dump; restores eviction order and serials exactly.
inline void ReplayBuffer::save(std::ostream& os) const {
  using namespace detail;
  put(os, kBufferMagic);
  put<std::uint64_t>(os, capacity_);
  put<std::uint64_t>(os, next_serial_);
  put<std::uint64_t>(os, episodes_.size());
  for (const auto& ep : episodes_) {
    put<std::uint8_t>(os, ep.mode == GoalMode::semantic ? 0 : 1);
    put_goal(os, ep.desired);
    put<std::uint64_t>(os, ep.length());
    for (const auto& o : ep.obs) os.write(reinterpret_cast<const char*>(o.data()), sizeof(double) * kObsWidth);
    for (const auto& a : ep.actions) os.write(reinterpret_cast<const char*>(a.data()), sizeof(double) * a.size());
    for (const auto& g : ep.achieved) put_goal(os, g);
  }
}

inline ReplayBuffer ReplayBuffer::load(std::istream& is) {
  using namespace detail;
  if (get<std::uint32_t>(is) != kBufferMagic) throw std::runtime_error("not a replay buffer file");
  ReplayBuffer b(get<std::uint64_t>(is));
  b.next_serial_ = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  for (std::uint64_t e = 0; e < n; ++e) {
    Episode ep;
    ep.mode = get<std::uint8_t>(is) == 0 ? GoalMode::semantic : GoalMode::continuous;
    ep.desired = get_goal(is);
    const auto T = get<std::uint64_t>(is);
    ep.obs.assign(T + 1, std::vector<double>(kObsWidth));
    for (auto& o : ep.obs) {
      for (auto& v : o) v = get<double>(is);
    }
    ep.actions.resize(T);
    for (auto& a : ep.actions) {
      for (auto& v : a) v = get<double>(is);
    }
    ep.achieved.resize(T + 1);
    for (auto& g : ep.achieved) g = get_goal(is);
    b.transitions_ += ep.length();
    b.episodes_.push_back(std::move(ep));
  }
  return b;
}

}  // namespace telos::replay
