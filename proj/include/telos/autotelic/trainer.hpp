#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telos/autotelic/curriculum.hpp"
#include "telos/autotelic/goals.hpp"
#include "telos/autotelic/rollout.hpp"
#include "telos/goalspace/continuous.hpp"
#include "telos/replay/replay.hpp"
#include "telos/sac/sac.hpp"

namespace telos::autotelic {

struct TrainConfig {
  GoalMode mode = GoalMode::semantic;
  std::size_t workers = 1;
  std::size_t nb_cycles = 50;
  std::size_t nb_rollouts_per_mpi = 2;
  std::size_t rollouts_length = world::kEpisodeLength;
  sac::SacConfig sac;  // batch_size is per worker; updates_per_cycle is nb_updates
  int k_replay = 4;
  double mc_her_prob = 0.5;
  double biased_init = 0.2;
  CurriculumOptions curriculum;
  std::size_t curriculum_queue_length = 1000;
  std::size_t buffer_size = 1'000'000;  // transitions per worker
  goals::HeldOut heldout;
  world::DynamicsParams dynamics;

  void validate() const {
    sac.validate();
    if (workers == 0) throw std::invalid_argument("TrainConfig: workers must be >= 1");
    if (nb_rollouts_per_mpi == 0) throw std::invalid_argument("TrainConfig: nb_rollouts_per_mpi must be >= 1");
    if (rollouts_length == 0) throw std::invalid_argument("TrainConfig: rollouts_length must be >= 1");
    if (buffer_size < rollouts_length) throw std::invalid_argument("TrainConfig: buffer_size below one episode");
    if (heldout && mode != GoalMode::semantic) throw std::invalid_argument("TrainConfig: held-out goals need semantic mode");
  }
};

struct CycleStats {
  std::size_t rollouts = 0;
  std::size_t self_evals = 0;
  std::size_t stored = 0;
  std::size_t rejected = 0;
  std::size_t successes = 0;
  std::size_t discovered_added = 0;
  std::size_t updates = 0;
  double critic_loss = 0;  // mean over the cycle's updates
  double actor_loss = 0;
  std::vector<RolloutResult> episodes;  // kept only when requested
};

// One learner fed by `workers` rollout workers, each with its own replay
// buffer. Workers run in lockstep; each update averages the gradients of one
// batch per worker, which equals one step on their concatenation.
class Trainer {
 public:
  Trainer(TrainConfig cfg, sac::AgentNets nets, std::uint64_t seed)
      : cfg_(std::move(cfg)),
        nets_(std::move(nets)),
        tracker_({goals::kContinuousClasses.begin(), goals::kContinuousClasses.end()}, cfg_.curriculum_queue_length),
        rng_(seed) {
    cfg_.validate();
    for (std::size_t w = 0; w < cfg_.workers; ++w) buffers_.emplace_back(cfg_.buffer_size);
  }

  const TrainConfig& config() const { return cfg_; }
  const sac::AgentNets& nets() const { return nets_; }
  sac::AgentNets& nets() { return nets_; }
  const DiscoveredGoals& discovered() const { return discovered_; }
  const LpTracker& tracker() const { return tracker_; }
  const replay::ReplayBuffer& buffer(std::size_t w) const { return buffers_.at(w); }
  std::uint64_t cycles_done() const { return cycles_; }
  std::mt19937_64& rng() { return rng_; }

  // Set to inspect the episodes of each cycle.
  bool keep_episodes = false;

  // One training cycle: rollouts, goal discovery or tracker updates, storage, updates.
  CycleStats cycle() {
    CycleStats s;
    const std::size_t per = cfg_.nb_rollouts_per_mpi;
    std::vector<RolloutSpec> specs;
    std::vector<ClassId> classes;
    std::vector<bool> self_eval;
    for (std::size_t w = 0; w < cfg_.workers; ++w) {
      if (cfg_.mode == GoalMode::semantic) {
        for (auto g : sample_goals(discovered_, per, rng_)) {
          specs.push_back({world::reset(rng_, cfg_.biased_init, cfg_.dynamics), Goal::semantic(g), false});
          self_eval.push_back(false);
        }
      } else {
        const auto draw = sample_class_lp(tracker_, per, rng_, cfg_.curriculum);
        for (std::size_t i = 0; i < per; ++i) {
          const auto g = goals::generate_positions(draw.classes[i], rng_, cfg_.dynamics.geometry);
          specs.push_back({world::reset(rng_, cfg_.biased_init, cfg_.dynamics), Goal::continuous(g), draw.self_eval[i]});
          classes.push_back(draw.classes[i]);
          self_eval.push_back(draw.self_eval[i]);
        }
      }
    }
    RolloutOptions ro;
    ro.length = cfg_.rollouts_length;
    ro.dynamics = cfg_.dynamics;
    auto results = rollout(nets_, specs, rng_, ro);
    s.rollouts = results.size();

    std::vector<replay::Episode> finished;
    for (std::size_t i = 0; i < results.size(); ++i) {
      s.successes += results[i].success;
      if (self_eval[i]) {
        ++s.self_evals;
        tracker_.record(classes[i], results[i].success);
        continue;
      }
      if (cfg_.mode == GoalMode::semantic) finished.push_back(results[i].episode);
    }
    s.discovered_added = update_goals(finished, discovered_, cfg_.heldout);
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (self_eval[i]) continue;
      auto& buf = buffers_[i / per];
      if (keep_episodes ? buf.store(results[i].episode, cfg_.heldout) : buf.store(std::move(results[i].episode), cfg_.heldout)) {
        ++s.stored;
      } else {
        ++s.rejected;
      }
    }
    if (keep_episodes) s.episodes = std::move(results);

    replay::SampleOptions so;
    so.batch_size = cfg_.sac.batch_size;
    so.k_replay = cfg_.k_replay;
    so.per_object_prob = cfg_.mc_her_prob;
    so.heldout = cfg_.heldout;
    for (std::size_t u = 0; u < cfg_.sac.updates_per_cycle; ++u) {
      std::vector<replay::Transition> batch;
      for (const auto& buf : buffers_) {
        if (buf.empty()) continue;
        auto part = buf.sample_batch(so, rng_);
        batch.insert(batch.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      if (batch.empty()) break;
      const auto st = sac::update(nets_, sac::make_batch(batch), cfg_.sac, rng_);
      s.critic_loss += st.critic_loss;
      s.actor_loss += st.actor_loss;
      ++s.updates;
    }
    if (s.updates > 0) {
      s.critic_loss /= static_cast<double>(s.updates);
      s.actor_loss /= static_cast<double>(s.updates);
    }
    ++cycles_;
    return s;
  }

  // Everything but the replay buffers, which go to a binary sidecar.
  nlohmann::json state_json() const {
    nlohmann::json j;
    j["nets"] = sac::to_json(nets_);
    j["discovered"] = discovered_.to_json();
    j["tracker"] = tracker_.to_json();
    std::ostringstream os;
    os << rng_;
    j["rng"] = os.str();
    j["cycles"] = cycles_;
    return j;
  }

  void load_state_json(const nlohmann::json& j) {
    sac::load_json(nets_, j.at("nets"));
    discovered_ = DiscoveredGoals::from_json(j.at("discovered"));
    tracker_.load_json(j.at("tracker"));
    std::istringstream is(j.at("rng").get<std::string>());
    is >> rng_;
    if (!is) throw std::runtime_error("checkpoint: bad rng state");
    cycles_ = j.at("cycles").get<std::uint64_t>();
  }

  void save_buffers(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    const std::uint64_t n = buffers_.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (const auto& b : buffers_) b.save(os);
    if (!os) throw std::runtime_error("write failed: " + path);
  }

  void load_buffers(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::uint64_t n = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    if (n != buffers_.size()) throw std::runtime_error(path + ": worker count differs from the config");
    for (auto& b : buffers_) b = replay::ReplayBuffer::load(is);
  }

 private:
  TrainConfig cfg_;
  sac::AgentNets nets_;
  DiscoveredGoals discovered_;
  LpTracker tracker_;
  std::vector<replay::ReplayBuffer> buffers_;
  std::mt19937_64 rng_;
  std::uint64_t cycles_ = 0;
};

// nb_cycles semantic training cycles.
inline std::vector<CycleStats> train_semantic(Trainer& t) {
  if (t.config().mode != GoalMode::semantic) throw std::invalid_argument("train_semantic: trainer is not in semantic mode");
  std::vector<CycleStats> out;
  for (std::size_t c = 0; c < t.config().nb_cycles; ++c) out.push_back(t.cycle());
  return out;
}

// nb_cycles continuous training cycles.
inline std::vector<CycleStats> train_continuous(Trainer& t) {
  if (t.config().mode != GoalMode::continuous) throw std::invalid_argument("train_continuous: trainer is not in continuous mode");
  std::vector<CycleStats> out;
  for (std::size_t c = 0; c < t.config().nb_cycles; ++c) out.push_back(t.cycle());
  return out;
}

}  // namespace telos::autotelic
