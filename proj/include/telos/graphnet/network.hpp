#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "telos/graphnet/graph.hpp"
#include "telos/numcore/mlp.hpp"

namespace telos::graph {

using num::Binder;
using num::Tape;
using num::Var;

enum class ArchitectureKind { GN, IN, RN, DS, FLAT };
enum class Head { actor, critic };

inline const char* kind_name(ArchitectureKind k) {
  switch (k) {
    case ArchitectureKind::GN: return "gn";
    case ArchitectureKind::IN: return "in";
    case ArchitectureKind::RN: return "rn";
    case ArchitectureKind::DS: return "ds";
    case ArchitectureKind::FLAT: return "flat";
  }
  return "?";
}

inline ArchitectureKind parse_kind(const std::string& s) {
  for (auto k : {ArchitectureKind::GN, ArchitectureKind::IN, ArchitectureKind::RN, ArchitectureKind::DS,
                 ArchitectureKind::FLAT}) {
    if (s == kind_name(k)) return k;
  }
  throw std::invalid_argument("unknown architecture '" + s + "' (gn, in, rn, ds, flat)");
}

inline constexpr std::size_t kActionDim = 4;
inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct NetSpec {
  ArchitectureKind kind = ArchitectureKind::GN;
  Head head = Head::critic;
  std::size_t node_dim = 9;
  std::size_t edge_dim = kEdgeWidth;
  std::size_t global_dim = 8;  // body, plus the action for critics
  std::size_t action_dim = kActionDim;
  std::size_t hidden = 256;         // readout hidden width
  std::size_t shared_hidden = 256;  // NN_mp / NN_node hidden width
  std::size_t attention_hidden = 64;
  bool use_attention = true;
  std::size_t extra_hidden = 0;  // second edge updater (RN) or node updater (DS); 0 = none
  std::size_t flat_width = 256;
  std::size_t flat_layers = 3;
};

// Input and output widths of the shared networks for a spec.
struct Widths {
  std::size_t mp_in = 0, mp_out = 0;
  std::size_t mp2_in = 0, mp2_out = 0;
  std::size_t node_in = 0, node_out = 0;
  std::size_t node2_in = 0, node2_out = 0;
  std::size_t pooled = 0;   // width fed to the readout besides U
  std::size_t edge_pool = 0;  // width of edge vectors pooled per node or graph
  std::size_t flat_in = 0;
};

inline Widths widths(const NetSpec& s) {
  Widths w;
  const std::size_t dx = s.node_dim, de = s.edge_dim, du = s.global_dim;
  switch (s.kind) {
    case ArchitectureKind::GN:
    case ArchitectureKind::IN:
      w.mp_in = de + 2 * dx + (s.kind == ArchitectureKind::GN ? du : 0);
      w.mp_out = 3 * w.mp_in;
      w.edge_pool = w.mp_out;
      w.node_in = dx + du + w.mp_out;
      w.node_out = 3 * w.node_in;
      w.pooled = w.node_out;
      break;
    case ArchitectureKind::RN:
      w.mp_in = de + 2 * dx + du;
      w.mp_out = 3 * w.mp_in;
      w.edge_pool = w.mp_out;
      if (s.extra_hidden > 0) {
        w.mp2_in = w.mp_out + du;
        w.mp2_out = 3 * w.mp2_in;
        w.edge_pool = w.mp2_out;
      }
      w.pooled = w.edge_pool;
      break;
    case ArchitectureKind::DS:
      w.edge_pool = de;
      w.node_in = dx + de + du;
      w.node_out = 3 * w.node_in;
      w.pooled = w.node_out;
      if (s.extra_hidden > 0) {
        w.node2_in = w.node_out + du;
        w.node2_out = 3 * w.node2_in;
        w.pooled = w.node2_out;
      }
      break;
    case ArchitectureKind::FLAT:
      w.flat_in = kNodes * dx + kEdges * de + du;
      break;
  }
  return w;
}

inline std::size_t head_out(const NetSpec& s) { return s.head == Head::actor ? 2 * s.action_dim : 1; }

inline std::size_t count_parameters(const NetSpec& s) {
  const Widths w = widths(s);
  auto mlp = [](std::size_t in, std::size_t h, std::size_t out) { return num::MlpShape{in, h, out}.param_count(); };
  auto att = [&](std::size_t d) { return d * s.attention_hidden + s.attention_hidden; };
  if (s.kind == ArchitectureKind::FLAT) {
    std::size_t n = 0, in = w.flat_in;
    for (std::size_t l = 0; l < s.flat_layers; ++l) {
      n += in * s.flat_width + s.flat_width;
      in = s.flat_width;
    }
    return n + in * head_out(s) + head_out(s);
  }
  std::size_t n = 0;
  if (w.mp_in) n += mlp(w.mp_in, s.shared_hidden, w.mp_out);
  if (w.mp2_in) n += mlp(w.mp2_in, s.extra_hidden, w.mp2_out);
  if (w.node_in) n += mlp(w.node_in, s.shared_hidden, w.node_out);
  if (w.node2_in) n += mlp(w.node2_in, s.extra_hidden, w.node2_out);
  if (s.use_attention) {
    // Edge pooling (per node for GN/IN/DS, per graph for RN) and node pooling.
    n += att(w.edge_pool);
    if (s.kind != ArchitectureKind::RN) n += att(w.pooled);
  }
  n += (w.pooled + s.global_dim) * s.hidden + s.hidden;
  n += s.hidden * head_out(s) + head_out(s);
  return n;
}

inline num::ParamStore init_network(const NetSpec& s, std::mt19937_64& rng) {
  num::ParamStore store;
  const Widths w = widths(s);
  auto add_head = [&](std::size_t in) {
    if (s.head == Head::actor) {
      num::add_linear(store, "mu", in, s.action_dim, rng);
      num::add_linear(store, "log_std", in, s.action_dim, rng);
    } else {
      num::add_linear(store, "q", in, 1, rng);
    }
  };
  if (s.kind == ArchitectureKind::FLAT) {
    std::size_t in = w.flat_in;
    for (std::size_t l = 0; l < s.flat_layers; ++l) {
      num::add_linear(store, "flat/l" + std::to_string(l), in, s.flat_width, rng);
      in = s.flat_width;
    }
    add_head(in);
    return store;
  }
  auto att = [&](const std::string& prefix, std::size_t d) {
    if (!s.use_attention) return;
    store.add(prefix + "/W", num::xavier_init(d, s.attention_hidden, rng));
    store.add(prefix + "/w", num::xavier_init(s.attention_hidden, 1, rng));
  };
  if (w.mp_in) num::add_mlp(store, "mp", {w.mp_in, s.shared_hidden, w.mp_out}, rng);
  if (w.mp2_in) num::add_mlp(store, "mp2", {w.mp2_in, s.extra_hidden, w.mp2_out}, rng);
  if (w.node_in) num::add_mlp(store, "node", {w.node_in, s.shared_hidden, w.node_out}, rng);
  if (w.node2_in) num::add_mlp(store, "node2", {w.node2_in, s.extra_hidden, w.node2_out}, rng);
  att("att_e", w.edge_pool);
  if (s.kind != ArchitectureKind::RN) att("att_n", w.pooled);
  num::add_linear(store, "out", w.pooled + s.global_dim, s.hidden, rng);
  add_head(s.hidden);
  return store;
}

// Per-row attention weights of v within each segment: softmax of w^T tanh(W v).
inline Var attention_weights(Binder& p, const std::string& prefix, Var v, num::RowIndexPtr segment,
                             std::size_t segments) {
  Tape& t = p.tape();
  Var scores = num::matmul(t, num::tanh(t, num::matmul(t, v, p(prefix + "/W"))), p(prefix + "/w"));
  return num::segment_softmax(t, scores, std::move(segment), segments);
}

// Attention-weighted (or plain) sum of the rows of v within each segment.
inline Var pool(Binder& p, const std::string& prefix, Var v, num::RowIndexPtr segment, std::size_t segments,
                bool use_attention) {
  Tape& t = p.tape();
  if (!use_attention) return num::segment_sum(t, v, std::move(segment), segments);
  Var a = attention_weights(p, prefix, v, segment, segments);
  return num::segment_sum(t, num::scale_rows(t, v, a), std::move(segment), segments);
}

// Tape leaves for a GoalGraph; globals may be replaced (critic action input).
struct GraphInputs {
  std::size_t count = 0;
  Var nodes, edges, globals;
};

inline GraphInputs graph_inputs(Tape& t, const GoalGraph& g) {
  return {g.count, t.frozen(g.nodes), t.frozen(g.edges), t.frozen(g.globals)};
}

// Globals = body ⊕ action, with the action a tape value (gradients flow to it).
inline GraphInputs graph_inputs(Tape& t, const GoalGraph& g, Var action) {
  GraphInputs in = graph_inputs(t, g);
  in.globals = num::concat_cols(t, {in.globals, action});
  return in;
}

// Readout hidden features (count x hidden; count x flat_width for FLAT).
inline Var forward_features(const NetSpec& s, Binder& p, const GraphInputs& in) {
  Tape& t = p.tape();
  const auto& gv = t.value(in.globals);
  if (gv.cols() != s.global_dim || t.value(in.nodes).cols() != s.node_dim || t.value(in.edges).cols() != s.edge_dim) {
    throw num::ShapeError("forward: graph widths do not match the network spec");
  }
  const std::size_t B = in.count;
  const auto idx = graph_index(B);
  const auto relu = num::Activation::relu;
  if (s.kind == ArchitectureKind::FLAT) {
    Var x = num::concat_cols(t, {num::reshape(t, in.nodes, B, kNodes * s.node_dim),
                                 num::reshape(t, in.edges, B, kEdges * s.edge_dim), in.globals});
    for (std::size_t l = 0; l < s.flat_layers; ++l) x = num::relu(t, num::linear(p, "flat/l" + std::to_string(l), x));
    return x;
  }
  const Widths w = widths(s);
  Var u_edge = num::gather_rows(t, in.globals, idx->edge_graph);
  Var u_node = num::gather_rows(t, in.globals, idx->node_graph);
  Var x_src = num::gather_rows(t, in.nodes, idx->edge_src);
  Var x_rcp = num::gather_rows(t, in.nodes, idx->edge_rcp);
  Var pooled;
  switch (s.kind) {
    case ArchitectureKind::GN:
    case ArchitectureKind::IN: {
      Var mp_in = s.kind == ArchitectureKind::GN ? num::concat_cols(t, {in.edges, x_src, x_rcp, u_edge})
                                                 : num::concat_cols(t, {in.edges, x_src, x_rcp});
      Var e1 = num::mlp_forward(p, "mp", mp_in, relu);
      Var agg = pool(p, "att_e", e1, idx->edge_rcp, B * kNodes, s.use_attention);
      Var x1 = num::mlp_forward(p, "node", num::concat_cols(t, {in.nodes, u_node, agg}), relu);
      pooled = pool(p, "att_n", x1, idx->node_graph, B, s.use_attention);
      break;
    }
    case ArchitectureKind::RN: {
      Var e1 = num::mlp_forward(p, "mp", num::concat_cols(t, {in.edges, x_src, x_rcp, u_edge}), relu);
      if (w.mp2_in) e1 = num::mlp_forward(p, "mp2", num::concat_cols(t, {e1, u_edge}), relu);
      pooled = pool(p, "att_e", e1, idx->edge_graph, B, s.use_attention);
      break;
    }
    case ArchitectureKind::DS: {
      Var agg = pool(p, "att_e", in.edges, idx->edge_rcp, B * kNodes, s.use_attention);
      Var x1 = num::mlp_forward(p, "node", num::concat_cols(t, {in.nodes, agg, u_node}), relu);
      if (w.node2_in) x1 = num::mlp_forward(p, "node2", num::concat_cols(t, {x1, u_node}), relu);
      pooled = pool(p, "att_n", x1, idx->node_graph, B, s.use_attention);
      break;
    }
    default:
      throw num::ContractError("forward: unknown architecture kind");
  }
  return num::relu(t, num::linear(p, "out", num::concat_cols(t, {pooled, in.globals})));
}

struct GaussianHead {
  Var mean;
  Var log_std;
};

// Two linear projections of the readout features; log_std clamped to [-20, 2].
inline GaussianHead actor_head(Binder& p, Var features) {
  Tape& t = p.tape();
  return {num::linear(p, "mu", features), num::clamp(t, num::linear(p, "log_std", features), kLogStdMin, kLogStdMax)};
}

inline GaussianHead actor_forward(const NetSpec& s, Binder& p, const GraphInputs& in) {
  if (s.head != Head::actor) throw num::ContractError("actor_forward: spec is not an actor");
  return actor_head(p, forward_features(s, p, in));
}

// count x 1 Q-values.
inline Var critic_forward(const NetSpec& s, Binder& p, const GraphInputs& in) {
  if (s.head != Head::critic) throw num::ContractError("critic_forward: spec is not a critic");
  return num::linear(p, "q", forward_features(s, p, in));
}

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapacityPlan {
  NetSpec spec;
  std::size_t params = 0;
  std::size_t reference = 0;  // GN count for the same dims
  double relative_gap() const {
    return std::abs(static_cast<double>(params) - static_cast<double>(reference)) / static_cast<double>(reference);
  }
};

inline constexpr double kCapacityTolerance = 0.05;

// Resizes kind's free width so its parameter count is as close as possible to
// GN's for the same dims: IN scales its shared hidden width, RN and DS get a
// second stacked edge / node updater, FLAT picks the width of its 3 layers.
inline CapacityPlan equalize_capacity(NetSpec base, ArchitectureKind kind) {
  NetSpec gn = base;
  gn.kind = ArchitectureKind::GN;
  gn.extra_hidden = 0;
  CapacityPlan plan;
  plan.reference = count_parameters(gn);
  NetSpec s = base;
  s.kind = kind;
  s.extra_hidden = 0;
  std::size_t* knob = nullptr;
  switch (kind) {
    case ArchitectureKind::GN: break;
    case ArchitectureKind::IN: knob = &s.shared_hidden; break;
    case ArchitectureKind::RN:
    case ArchitectureKind::DS: knob = &s.extra_hidden; break;
    case ArchitectureKind::FLAT: knob = &s.flat_width; break;
  }
  if (knob) {
    std::size_t best = 1;
    double best_gap = INFINITY;
    for (std::size_t v = 1; v <= 8192; ++v) {
      *knob = v;
      const double gap = std::abs(static_cast<double>(count_parameters(s)) - static_cast<double>(plan.reference));
      if (gap < best_gap) {
        best_gap = gap;
        best = v;
      }
    }
    *knob = best;
  }
  plan.spec = s;
  plan.params = count_parameters(s);
  if (plan.relative_gap() > kCapacityTolerance) {
    throw CapacityError(std::string("equalize_capacity: ") + kind_name(kind) + " reaches " +
                        std::to_string(plan.params) + " parameters vs " + std::to_string(plan.reference) + " for gn");
  }
  return plan;
}

}  // namespace telos::graph
