#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "telos/goalspace/rewards.hpp"
#include "telos/goalspace/semantic.hpp"
#include "telos/numcore/matrix.hpp"
#include "telos/numcore/ops.hpp"

namespace telos::graph {

using num::Matrix;

inline constexpr std::size_t kNodes = kNumObjects;
inline constexpr std::size_t kEdges = kNodes * (kNodes - 1);
inline constexpr std::size_t kEdgeWidth = 3;

// Directed edge i->j, ordered by source then recipient (i != j).
constexpr std::size_t edge_id(std::size_t src, std::size_t rcp) { return src * (kNodes - 1) + (rcp < src ? rcp : rcp - 1); }

struct EdgeEnds {
  std::size_t src;
  std::size_t rcp;
};

constexpr std::array<EdgeEnds, kEdges> make_edge_table() {
  std::array<EdgeEnds, kEdges> t{};
  for (std::size_t i = 0; i < kNodes; ++i) {
    for (std::size_t j = 0; j < kNodes; ++j) {
      if (i != j) t[edge_id(i, j)] = {i, j};
    }
  }
  return t;
}

inline constexpr auto kEdgeTable = make_edge_table();

// One or more fully connected object graphs. Rows are grouped by graph:
// nodes (count*5 x dx), edges (count*20 x 3), globals (count x du).
struct GoalGraph {
  std::size_t count = 0;
  Matrix nodes;
  Matrix edges;
  Matrix globals;
};

inline void fill_semantic_edges(Matrix& edges, std::size_t row0, goals::SemanticConfiguration goal) {
  for (std::size_t e = 0; e < kEdges; ++e) {
    const auto slice = goal.edge_slice(kEdgeTable[e].src, kEdgeTable[e].rcp);
    for (std::size_t c = 0; c < kEdgeWidth; ++c) edges(row0 + e, c) = slice[c];
  }
}

inline void fill_continuous_edges(Matrix& edges, std::size_t row0, const goals::ContinuousGoal& goal) {
  for (std::size_t e = 0; e < kEdges; ++e) {
    const auto& t = goal.targets[kEdgeTable[e].src];
    for (std::size_t c = 0; c < kEdgeWidth; ++c) edges(row0 + e, c) = t[c];
  }
}

namespace detail {

inline GoalGraph base_graph(std::span<const std::vector<double>> objects, std::span<const double> body,
                            std::optional<std::span<const double>> action) {
  if (objects.size() != kNodes) throw num::ShapeError("build_goal_graph: expected 5 object vectors");
  const std::size_t dx = objects[0].size();
  GoalGraph g;
  g.count = 1;
  g.nodes = Matrix(kNodes, dx);
  for (std::size_t i = 0; i < kNodes; ++i) {
    if (objects[i].size() != dx) throw num::ShapeError("build_goal_graph: object vectors differ in width");
    std::copy(objects[i].begin(), objects[i].end(), g.nodes.row(i).begin());
  }
  g.edges = Matrix(kEdges, kEdgeWidth);
  const std::size_t da = action ? action->size() : 0;
  g.globals = Matrix(1, body.size() + da);
  std::copy(body.begin(), body.end(), g.globals.row(0).begin());
  if (action) std::copy(action->begin(), action->end(), g.globals.row(0).begin() + static_cast<std::ptrdiff_t>(body.size()));
  return g;
}

}  // namespace detail

inline GoalGraph build_goal_graph(std::span<const std::vector<double>> objects, goals::SemanticConfiguration goal,
                                  std::span<const double> body,
                                  std::optional<std::span<const double>> action = std::nullopt) {
  GoalGraph g = detail::base_graph(objects, body, action);
  fill_semantic_edges(g.edges, 0, goal);
  return g;
}

inline GoalGraph build_goal_graph(std::span<const std::vector<double>> objects, const goals::ContinuousGoal& goal,
                                  std::span<const double> body,
                                  std::optional<std::span<const double>> action = std::nullopt) {
  GoalGraph g = detail::base_graph(objects, body, action);
  fill_continuous_edges(g.edges, 0, goal);
  return g;
}

// Raw goal vector: 30 predicate bits or 5x3 target coordinates.
inline GoalGraph build_goal_graph(std::span<const std::vector<double>> objects, std::span<const double> goal,
                                  std::span<const double> body,
                                  std::optional<std::span<const double>> action = std::nullopt) {
  if (goal.size() == goals::kSemanticWidth) {
    goals::SemanticConfiguration c;
    for (std::size_t k = 0; k < goal.size(); ++k) c.set_bit(k, goal[k] > 0.5);
    return build_goal_graph(objects, c, body, action);
  }
  if (goal.size() == kNodes * 3) {
    goals::ContinuousGoal c;
    for (std::size_t i = 0; i < kNodes; ++i) c.targets[i] = {goal[3 * i], goal[3 * i + 1], goal[3 * i + 2]};
    return build_goal_graph(objects, c, body, action);
  }
  throw num::ShapeError("build_goal_graph: goal width " + std::to_string(goal.size()) + " is neither 30 nor 15");
}

inline GoalGraph stack_graphs(std::span<const GoalGraph> parts) {
  if (parts.empty()) throw num::ShapeError("stack_graphs: nothing to stack");
  std::size_t count = 0;
  for (const auto& p : parts) count += p.count;
  GoalGraph out;
  out.count = count;
  out.nodes = Matrix(count * kNodes, parts[0].nodes.cols());
  out.edges = Matrix(count * kEdges, parts[0].edges.cols());
  out.globals = Matrix(count, parts[0].globals.cols());
  std::size_t at = 0;
  for (const auto& p : parts) {
    if (p.nodes.cols() != out.nodes.cols() || p.globals.cols() != out.globals.cols()) {
      throw num::ShapeError("stack_graphs: inconsistent widths");
    }
    std::copy(p.nodes.values().begin(), p.nodes.values().end(), out.nodes.data() + at * kNodes * out.nodes.cols());
    std::copy(p.edges.values().begin(), p.edges.values().end(), out.edges.data() + at * kEdges * out.edges.cols());
    std::copy(p.globals.values().begin(), p.globals.values().end(), out.globals.data() + at * out.globals.cols());
    at += p.count;
  }
  return out;
}

// Row index tables for a batch of graphs.
struct GraphIndex {
  num::RowIndexPtr edge_src;    // edge -> global source node row
  num::RowIndexPtr edge_rcp;    // edge -> global recipient node row
  num::RowIndexPtr edge_graph;  // edge -> graph
  num::RowIndexPtr node_graph;  // node -> graph
};

inline std::shared_ptr<const GraphIndex> graph_index(std::size_t count) {
  thread_local std::map<std::size_t, std::shared_ptr<const GraphIndex>> cache;
  auto it = cache.find(count);
  if (it != cache.end()) return it->second;
  num::RowIndex src, rcp, eg, ng;
  for (std::size_t b = 0; b < count; ++b) {
    const auto base = static_cast<std::uint32_t>(b * kNodes);
    for (const auto& e : kEdgeTable) {
      src.push_back(base + static_cast<std::uint32_t>(e.src));
      rcp.push_back(base + static_cast<std::uint32_t>(e.rcp));
      eg.push_back(static_cast<std::uint32_t>(b));
    }
    for (std::size_t i = 0; i < kNodes; ++i) ng.push_back(static_cast<std::uint32_t>(b));
  }
  auto idx = std::make_shared<GraphIndex>();
  idx->edge_src = std::make_shared<const num::RowIndex>(std::move(src));
  idx->edge_rcp = std::make_shared<const num::RowIndex>(std::move(rcp));
  idx->edge_graph = std::make_shared<const num::RowIndex>(std::move(eg));
  idx->node_graph = std::make_shared<const num::RowIndex>(std::move(ng));
  cache.emplace(count, idx);
  return idx;
}

}  // namespace telos::graph
