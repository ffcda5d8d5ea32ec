#pragma once

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "telos/goalspace/goal.hpp"
#include "telos/graphnet/graph.hpp"
#include "telos/graphnet/network.hpp"
#include "telos/numcore/adam.hpp"
#include "telos/numcore/mlp.hpp"
#include "telos/replay/replay.hpp"

namespace telos::sac {

using graph::GoalGraph;
using graph::NetSpec;
using num::Matrix;
using num::ParamStore;
using num::Tape;
using num::Var;

struct SacConfig {
  double gamma = 0.99;
  double polyak = 0.95;  // mass kept on the old target
  double alpha = 0.2;
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  std::size_t batch_size = 256;
  std::size_t updates_per_cycle = 30;

  void validate() const {
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("SacConfig: gamma must lie in (0,1)");
    if (!(polyak >= 0 && polyak <= 1)) throw std::invalid_argument("SacConfig: polyak must lie in [0,1]");
    if (!(alpha >= 0)) throw std::invalid_argument("SacConfig: alpha must be >= 0");
  }
};

// Actor, twin critics and their targets, with optimizer state.
struct AgentNets {
  NetSpec actor_spec;
  NetSpec critic_spec;
  ParamStore actor, q1, q2, q1_target, q2_target;
  num::AdamState actor_opt, q1_opt, q2_opt;

  // `base` fixes the architecture and widths; the head and global widths are
  // set here (critics take the action as extra globals).
  static AgentNets create(NetSpec base, std::uint64_t seed) {
    AgentNets n;
    n.actor_spec = base;
    n.actor_spec.head = graph::Head::actor;
    n.actor_spec.global_dim = world::kBodyWidth;
    n.critic_spec = base;
    n.critic_spec.head = graph::Head::critic;
    n.critic_spec.global_dim = world::kBodyWidth + graph::kActionDim;
    std::mt19937_64 rng(seed);
    n.actor = graph::init_network(n.actor_spec, rng);
    n.q1 = graph::init_network(n.critic_spec, rng);
    n.q2 = graph::init_network(n.critic_spec, rng);
    n.q1_target = graph::init_network(n.critic_spec, rng);
    n.q2_target = graph::init_network(n.critic_spec, rng);
    n.q1_target.copy_values_from(n.q1);
    n.q2_target.copy_values_from(n.q2);
    n.actor_opt = num::AdamState::for_store(n.actor);
    n.q1_opt = num::AdamState::for_store(n.q1);
    n.q2_opt = num::AdamState::for_store(n.q2);
    return n;
  }
};

// Graphs for flattened observations (body then object rows) and goals.
inline GoalGraph observation_graphs(std::span<const std::vector<double>* const> obs, std::span<const goals::Goal* const> g) {
  if (obs.size() != g.size()) throw num::ShapeError("observation_graphs: observation and goal counts differ");
  const std::size_t B = obs.size();
  GoalGraph out;
  out.count = B;
  out.nodes = Matrix(B * graph::kNodes, world::kObjectWidth);
  out.edges = Matrix(B * graph::kEdges, graph::kEdgeWidth);
  out.globals = Matrix(B, world::kBodyWidth);
  for (std::size_t b = 0; b < B; ++b) {
    const auto& o = *obs[b];
    if (o.size() != replay::kObsWidth) throw num::ShapeError("observation_graphs: bad observation width");
    std::copy(o.begin(), o.begin() + world::kBodyWidth, out.globals.row(b).begin());
    std::copy(o.begin() + world::kBodyWidth, o.end(), out.nodes.row(b * graph::kNodes).begin());
    if (g[b]->mode == goals::GoalMode::semantic) {
      graph::fill_semantic_edges(out.edges, b * graph::kEdges, g[b]->config);
    } else {
      graph::fill_continuous_edges(out.edges, b * graph::kEdges, g[b]->targets);
    }
  }
  return out;
}

// Training batch in network form. done marks true terminals (never set by
// the environment, whose episodes end by time limit only).
struct SacBatch {
  GoalGraph obs;
  GoalGraph next_obs;
  Matrix actions;  // B x 4
  Matrix rewards;  // B x 1
  Matrix done;     // B x 1
  std::size_t size() const { return actions.rows(); }
};

inline SacBatch make_batch(const std::vector<replay::Transition>& batch) {
  const std::size_t B = batch.size();
  std::vector<const std::vector<double>*> o(B), no(B);
  std::vector<const goals::Goal*> g(B);
  SacBatch out;
  out.actions = Matrix(B, graph::kActionDim);
  out.rewards = Matrix(B, 1);
  out.done = Matrix(B, 1);
  for (std::size_t b = 0; b < B; ++b) {
    o[b] = &batch[b].obs;
    no[b] = &batch[b].next_obs;
    g[b] = &batch[b].goal;
    for (std::size_t k = 0; k < graph::kActionDim; ++k) out.actions(b, k) = batch[b].action[k];
    out.rewards(b, 0) = batch[b].reward.reward;
  }
  out.obs = observation_graphs(o, g);
  out.next_obs = observation_graphs(no, g);
  return out;
}

inline constexpr double kLog2 = 0.69314718055994530942;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct PolicySample {
  Var action;    // B x 4, in (-1, 1)
  Var log_prob;  // B x 1
};

// Reparameterized tanh-Gaussian sample u = mean + exp(log_std) * eps with
// log pi(a) = log N(u) - sum log(1 - tanh(u)^2).
inline PolicySample tanh_gaussian(Tape& t, const graph::GaussianHead& head, const Matrix& eps) {
  Var e = t.constant(eps);
  Var u = num::add(t, head.mean, num::mul(t, num::exp(t, head.log_std), e));
  // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
  Var squash = num::scale(t, num::add_scalar(t, num::add(t, u, num::softplus(t, num::scale(t, u, -2.0))), -kLog2), -2.0);
  Matrix half_sq = eps;
  for (std::size_t i = 0; i < half_sq.size(); ++i) half_sq[i] = -0.5 * eps[i] * eps[i] - kHalfLog2Pi;
  Var gauss = num::sub(t, t.constant(std::move(half_sq)), head.log_std);
  return {num::tanh(t, u), num::row_sum(t, num::sub(t, gauss, squash))};
}

inline Matrix normal_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = num::standard_normal(rng);
  return m;
}

inline Var q_value(const NetSpec& spec, num::Binder& p, const GoalGraph& g, Var action) {
  return graph::critic_forward(spec, p, graph::graph_inputs(p.tape(), g, action));
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw num::PoisonedUpdate(std::string(what) + ": non-finite loss");
}

// y = r + gamma (1 - done) (min target Q(s', a') - alpha log pi(a'|s')), a' ~ pi.
inline Matrix critic_targets(const AgentNets& n, const SacBatch& b, const SacConfig& cfg, std::mt19937_64& rng) {
  Tape t(false);
  num::Binder pa(t, n.actor);
  const auto head = graph::actor_forward(n.actor_spec, pa, graph::graph_inputs(t, b.next_obs));
  const auto next = tanh_gaussian(t, head, normal_matrix(b.size(), graph::kActionDim, rng));
  num::Binder p1(t, n.q1_target), p2(t, n.q2_target);
  Var q = num::minimum(t, q_value(n.critic_spec, p1, b.next_obs, next.action),
                       q_value(n.critic_spec, p2, b.next_obs, next.action));
  const Matrix& qv = t.value(q);
  const Matrix& lp = t.value(next.log_prob);
  Matrix y(b.size(), 1);
  for (std::size_t i = 0; i < b.size(); ++i) {
    y(i, 0) = b.rewards(i, 0) + cfg.gamma * (1.0 - b.done(i, 0)) * (qv(i, 0) - cfg.alpha * lp(i, 0));
  }
  return y;
}

// Mean squared error of both critics against y, recorded on t.
inline Var critic_loss(Tape& t, num::Binder& p1, num::Binder& p2, const NetSpec& spec, const SacBatch& b,
                       const Matrix& y) {
  Var a = t.frozen(b.actions);
  Var target = t.frozen(y);
  Var l1 = num::mean_all(t, num::square(t, num::sub(t, q_value(spec, p1, b.obs, a), target)));
  Var l2 = num::mean_all(t, num::square(t, num::sub(t, q_value(spec, p2, b.obs, a), target)));
  return num::add(t, l1, l2);
}

// Leaves gradients in q1 and q2.
inline double critic_loss(AgentNets& n, const SacBatch& b, const Matrix& y) {
  Tape t;
  num::Binder p1(t, n.q1), p2(t, n.q2);
  Var loss = critic_loss(t, p1, p2, n.critic_spec, b, y);
  const double v = t.value(loss)(0, 0);
  require_finite(v, "critic_loss");
  t.backward(loss);
  return v;
}

// mean(alpha log pi(a|s) - min Q(s, a)) with a reparameterized by eps.
inline Var actor_loss(Tape& t, num::Binder& pa, const AgentNets& n, const SacBatch& b, const SacConfig& cfg,
                      const Matrix& eps) {
  const auto head = graph::actor_forward(n.actor_spec, pa, graph::graph_inputs(t, b.obs));
  const auto s = tanh_gaussian(t, head, eps);
  num::Binder p1(t, n.q1), p2(t, n.q2);
  Var q = num::minimum(t, q_value(n.critic_spec, p1, b.obs, s.action), q_value(n.critic_spec, p2, b.obs, s.action));
  return num::mean_all(t, num::sub(t, num::scale(t, s.log_prob, cfg.alpha), q));
}

// Gradients land in the actor only.
inline double actor_loss(AgentNets& n, const SacBatch& b, const SacConfig& cfg, const Matrix& eps) {
  Tape t;
  num::Binder pa(t, n.actor);
  Var loss = actor_loss(t, pa, n, b, cfg, eps);
  const double v = t.value(loss)(0, 0);
  require_finite(v, "actor_loss");
  t.backward(loss);
  return v;
}

// target <- polyak * target + (1 - polyak) * critic
inline void soft_update(const ParamStore& critic, ParamStore& target, double polyak) {
  target.check_layout(critic);
  for (auto& [name, p] : target) {
    const auto& c = critic.at(name).value;
    for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = polyak * p.value[i] + (1.0 - polyak) * c[i];
  }
}

struct UpdateStats {
  double critic_loss = 0;
  double actor_loss = 0;
};

// One SAC step: critics, then actor, then target smoothing.
inline UpdateStats update(AgentNets& n, const SacBatch& b, const SacConfig& cfg, std::mt19937_64& rng) {
  UpdateStats s;
  const Matrix y = critic_targets(n, b, cfg, rng);
  s.critic_loss = critic_loss(n, b, y);
  num::adam_step(n.q1, n.q1_opt, cfg.lr_critic);
  num::adam_step(n.q2, n.q2_opt, cfg.lr_critic);
  s.actor_loss = actor_loss(n, b, cfg, normal_matrix(b.size(), graph::kActionDim, rng));
  num::adam_step(n.actor, n.actor_opt, cfg.lr_actor);
  soft_update(n.q1, n.q1_target, cfg.polyak);
  soft_update(n.q2, n.q2_target, cfg.polyak);
  return s;
}

// Actions for a batch of graphs: tanh(mean) for rows flagged deterministic,
// otherwise tanh of a reparameterized sample.
inline std::vector<world::Action> act(const AgentNets& n, const GoalGraph& g, const std::vector<bool>& deterministic,
                                      std::mt19937_64& rng) {
  if (deterministic.size() != g.count) throw num::ShapeError("act: one deterministic flag per graph expected");
  Tape t(false);
  num::Binder pa(t, n.actor);
  const auto head = graph::actor_forward(n.actor_spec, pa, graph::graph_inputs(t, g));
  const Matrix& mu = t.value(head.mean);
  const Matrix& ls = t.value(head.log_std);
  std::vector<world::Action> out(g.count);
  for (std::size_t b = 0; b < g.count; ++b) {
    for (std::size_t k = 0; k < graph::kActionDim; ++k) {
      const double u = deterministic[b] ? mu(b, k) : mu(b, k) + std::exp(ls(b, k)) * num::standard_normal(rng);
      out[b][k] = std::tanh(u);
    }
  }
  return out;
}

inline std::vector<world::Action> act(const AgentNets& n, const GoalGraph& g, bool deterministic, std::mt19937_64& rng) {
  return act(n, g, std::vector<bool>(g.count, deterministic), rng);
}

inline world::Action act(const AgentNets& n, const world::Observation& obs, const goals::Goal& goal,
                         bool deterministic, std::mt19937_64& rng) {
  const GoalGraph g = goal.mode == goals::GoalMode::semantic
                          ? graph::build_goal_graph(obs.objects, goal.config, obs.body)
                          : graph::build_goal_graph(obs.objects, goal.targets, obs.body);
  return act(n, g, deterministic, rng)[0];
}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const AgentNets& n) {
  nlohmann::json j;
  j["actor"] = n.actor.to_json();
  j["q1"] = n.q1.to_json();
  j["q2"] = n.q2.to_json();
  j["q1_target"] = n.q1_target.to_json();
  j["q2_target"] = n.q2_target.to_json();
  j["actor_opt"] = n.actor_opt.to_json();
  j["q1_opt"] = n.q1_opt.to_json();
  j["q2_opt"] = n.q2_opt.to_json();
  return j;
}

// Restores values into nets created with the same specs.
inline void load_json(AgentNets& n, const nlohmann::json& j) {
  auto load = [&](ParamStore& dst, const char* key) {
    const auto src = ParamStore::from_json(j.at(key));
    dst.check_layout(src);
    dst.copy_values_from(src);
  };
  load(n.actor, "actor");
  load(n.q1, "q1");
  load(n.q2, "q2");
  load(n.q1_target, "q1_target");
  load(n.q2_target, "q2_target");
  n.actor_opt.load_json(j.at("actor_opt"));
  n.q1_opt.load_json(j.at("q1_opt"));
  n.q2_opt.load_json(j.at("q2_opt"));
}

}  // namespace telos::sac
