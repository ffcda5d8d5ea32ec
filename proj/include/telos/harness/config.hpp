#pragma once

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "telos/autotelic/trainer.hpp"
#include "telos/graphnet/network.hpp"

namespace telos::harness {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::size_t default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return std::clamp<std::size_t>(hw == 0 ? 1 : hw, 1, 24);
}

// One experiment. Keys are the flat config names.
struct RunConfig {
  graph::ArchitectureKind architecture = graph::ArchitectureKind::GN;
  goals::GoalMode goal_mode = goals::GoalMode::semantic;
  std::size_t nb_mpis = default_workers();
  std::size_t nb_cycles = 50;
  std::size_t nb_rollouts_per_mpi = 2;
  std::size_t rollouts_length = 200;
  std::size_t nb_updates = 30;
  std::string replay_strategy = "future";
  int k_replay = 4;
  std::size_t batch_size = 256;
  double gamma = 0.99;
  double tau = 0.95;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  double alpha = 0.2;
  double biased_init = 0.2;
  double self_eval_curriculum = 0.1;
  std::size_t curriculum_queue_length = 1000;
  double curriculum_epsilon = 0.1;
  double mc_her_prob = 0.5;
  std::size_t buffer_size = 1'000'000;
  std::size_t hidden = 256;
  std::size_t shared_hidden = 256;
  std::size_t attention_hidden = 64;
  bool equalize_capacity = true;
  bool no_attention = false;
  bool no_curriculum = false;
  bool no_biased_init = false;
  int scenario = 0;  // 0 = none
  std::uint64_t seed = 0;
  std::size_t n_epochs = 100;
  std::size_t eval_goals = 24;
  std::size_t checkpoint_every = 1;
  double time_budget = 0;  // seconds; no new epoch starts once it would overrun. 0 = none

  void validate() const {
    if (scenario < 0 || scenario > 3) throw ConfigError("scenario must be none, 1, 2 or 3");
    if (scenario != 0 && goal_mode != goals::GoalMode::semantic) throw ConfigError("transfer scenarios need goal_mode = semantic");
    if (replay_strategy != "future" && replay_strategy != "none") throw ConfigError("replay_strategy must be future or none");
    if (nb_mpis == 0 || nb_cycles == 0 || nb_rollouts_per_mpi == 0 || rollouts_length == 0 || batch_size == 0) {
      throw ConfigError("nb_mpis, nb_cycles, nb_rollouts_per_mpi, rollouts_length and batch_size must be >= 1");
    }
    if (!(tau >= 0 && tau <= 1)) throw ConfigError("tau must lie in [0,1]");
    if (!(gamma > 0 && gamma < 1)) throw ConfigError("gamma must lie in (0,1)");
    if (!(alpha >= 0)) throw ConfigError("alpha must be >= 0");
    for (double p : {biased_init, self_eval_curriculum, curriculum_epsilon, mc_her_prob}) {
      if (!(p >= 0 && p <= 1)) throw ConfigError("probabilities must lie in [0,1]");
    }
    if (k_replay < 0) throw ConfigError("k_replay must be >= 0");
    if (eval_goals == 0) throw ConfigError("eval_goals must be >= 1");
    if (checkpoint_every == 0) throw ConfigError("checkpoint_every must be >= 1");
    if (!(time_budget >= 0)) throw ConfigError("time_budget must be >= 0");
    if (buffer_size < rollouts_length) throw ConfigError("buffer_size must hold one episode");
  }

  nlohmann::ordered_json to_json() const;
};

namespace detail {

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<nlohmann::ordered_json(const RunConfig&)> get;
};

inline std::size_t parse_size(const std::string& v) {
  std::size_t used = 0;
  if (v.empty() || v[0] == '-') throw ConfigError("expected a non-negative integer, got '" + v + "'");
  const auto x = std::stoull(v, &used);
  if (used != v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

inline double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

inline int parse_scenario(const std::string& v) {
  if (v == "none" || v == "0") return 0;
  if (v == "1" || v == "2" || v == "3") return v[0] - '0';
  throw ConfigError("scenario must be none, 1, 2 or 3, got '" + v + "'");
}

template <class T>
Field size_field(T RunConfig::*m) {
  return {[m](RunConfig& c, const std::string& v) { c.*m = static_cast<T>(parse_size(v)); },
          [m](const RunConfig& c) { return nlohmann::ordered_json(c.*m); }};
}

inline Field double_field(double RunConfig::*m) {
  return {[m](RunConfig& c, const std::string& v) { c.*m = parse_double(v); },
          [m](const RunConfig& c) { return nlohmann::ordered_json(c.*m); }};
}

inline Field bool_field(bool RunConfig::*m) {
  return {[m](RunConfig& c, const std::string& v) { c.*m = parse_bool(v); },
          [m](const RunConfig& c) { return nlohmann::ordered_json(c.*m); }};
}

inline const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> f = {
      {"architecture",
       {[](RunConfig& c, const std::string& v) { c.architecture = graph::parse_kind(v); },
        [](const RunConfig& c) { return nlohmann::ordered_json(graph::kind_name(c.architecture)); }}},
      {"goal_mode",
       {[](RunConfig& c, const std::string& v) { c.goal_mode = goals::parse_mode(v); },
        [](const RunConfig& c) { return nlohmann::ordered_json(goals::mode_name(c.goal_mode)); }}},
      {"nb_mpis", size_field(&RunConfig::nb_mpis)},
      {"nb_cycles", size_field(&RunConfig::nb_cycles)},
      {"nb_rollouts_per_mpi", size_field(&RunConfig::nb_rollouts_per_mpi)},
      {"rollouts_length", size_field(&RunConfig::rollouts_length)},
      {"nb_updates", size_field(&RunConfig::nb_updates)},
      {"replay_strategy",
       {[](RunConfig& c, const std::string& v) { c.replay_strategy = v; },
        [](const RunConfig& c) { return nlohmann::ordered_json(c.replay_strategy); }}},
      {"k_replay",
       {[](RunConfig& c, const std::string& v) { c.k_replay = static_cast<int>(parse_size(v)); },
        [](const RunConfig& c) { return nlohmann::ordered_json(c.k_replay); }}},
      {"batch_size", size_field(&RunConfig::batch_size)},
      {"gamma", double_field(&RunConfig::gamma)},
      {"tau", double_field(&RunConfig::tau)},
      {"lr_actor", double_field(&RunConfig::lr_actor)},
      {"lr_critic", double_field(&RunConfig::lr_critic)},
      {"alpha", double_field(&RunConfig::alpha)},
      {"biased_init", double_field(&RunConfig::biased_init)},
      {"self_eval_curriculum", double_field(&RunConfig::self_eval_curriculum)},
      {"curriculum_queue_length", size_field(&RunConfig::curriculum_queue_length)},
      {"curriculum_epsilon", double_field(&RunConfig::curriculum_epsilon)},
      {"mc_her_prob", double_field(&RunConfig::mc_her_prob)},
      {"buffer_size", size_field(&RunConfig::buffer_size)},
      {"hidden", size_field(&RunConfig::hidden)},
      {"shared_hidden", size_field(&RunConfig::shared_hidden)},
      {"attention_hidden", size_field(&RunConfig::attention_hidden)},
      {"equalize_capacity", bool_field(&RunConfig::equalize_capacity)},
      {"no_attention", bool_field(&RunConfig::no_attention)},
      {"no_curriculum", bool_field(&RunConfig::no_curriculum)},
      {"no_biased_init", bool_field(&RunConfig::no_biased_init)},
      {"scenario",
       {[](RunConfig& c, const std::string& v) { c.scenario = parse_scenario(v); },
        [](const RunConfig& c) {
          return c.scenario == 0 ? nlohmann::ordered_json("none") : nlohmann::ordered_json(std::to_string(c.scenario));
        }}},
      {"seed", size_field(&RunConfig::seed)},
      {"n_epochs", size_field(&RunConfig::n_epochs)},
      {"eval_goals", size_field(&RunConfig::eval_goals)},
      {"checkpoint_every", size_field(&RunConfig::checkpoint_every)},
      {"time_budget", double_field(&RunConfig::time_budget)},
  };
  return f;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace detail

// Sets one key; unknown keys and bad values throw ConfigError.
inline void set_key(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& [name, f] : detail::fields()) {
    if (name != key) continue;
    try {
      f.set(c, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key + ": " + e.what());
    }
    return;
  }
  throw ConfigError("unknown key '" + key + "'");
}

// Flat `key = value` lines; `#` starts a comment.
inline RunConfig parse_config(std::istream& in, const std::string& source = "config") {
  RunConfig c;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(n) + ": expected key = value");
    try {
      set_key(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in, path);
}

inline nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [name, f] : detail::fields()) j[name] = f.get(*this);
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  for (const auto& [key, v] : j.items()) set_key(c, key, v.is_string() ? v.get<std::string>() : v.dump());
  c.validate();
  return c;
}

inline graph::NetSpec net_spec(const RunConfig& c) {
  graph::NetSpec s;
  s.kind = c.architecture;
  s.hidden = c.hidden;
  s.shared_hidden = c.shared_hidden;
  s.attention_hidden = c.attention_hidden;
  s.use_attention = !c.no_attention;
  s.flat_width = c.hidden;
  if (c.equalize_capacity && c.architecture != graph::ArchitectureKind::GN) {
    // Match the critic, the larger of the two networks.
    graph::NetSpec critic = s;
    critic.head = graph::Head::critic;
    critic.global_dim = world::kBodyWidth + graph::kActionDim;
    s = graph::equalize_capacity(critic, c.architecture).spec;
    s.head = graph::Head::actor;
    s.global_dim = world::kBodyWidth;
  }
  return s;
}

inline autotelic::TrainConfig train_config(const RunConfig& c) {
  autotelic::TrainConfig t;
  t.mode = c.goal_mode;
  t.workers = c.nb_mpis;
  t.nb_cycles = c.nb_cycles;
  t.nb_rollouts_per_mpi = c.nb_rollouts_per_mpi;
  t.rollouts_length = c.rollouts_length;
  t.sac.gamma = c.gamma;
  t.sac.polyak = c.tau;
  t.sac.alpha = c.alpha;
  t.sac.lr_actor = c.lr_actor;
  t.sac.lr_critic = c.lr_critic;
  t.sac.batch_size = c.batch_size;
  t.sac.updates_per_cycle = c.nb_updates;
  t.k_replay = c.replay_strategy == "none" ? 0 : c.k_replay;
  t.mc_her_prob = c.mc_her_prob;
  t.biased_init = c.no_biased_init ? 0.0 : c.biased_init;
  t.curriculum.epsilon = c.curriculum_epsilon;
  t.curriculum.self_eval = c.self_eval_curriculum;
  t.curriculum.uniform = c.no_curriculum;
  t.curriculum_queue_length = c.curriculum_queue_length;
  t.buffer_size = c.buffer_size;
  return t;
}

}  // namespace telos::harness
