#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <utility>
#include <vector>

#include "telos/numcore/matrix.hpp"
#include "telos/numcore/param_store.hpp"

namespace telos::num {

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kNone;
  bool valid() const { return id != kNone; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so the node
// vector is already topologically sorted; backward walks it once in reverse.
// A tape built with record=false only evaluates values.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Matrix value) { return push(std::move(value), nullptr, nullptr, false, {}); }

  // Reference to an externally owned matrix that receives no gradient.
  Var frozen(const Matrix& value) { return push(Matrix{}, &value, nullptr, false, {}); }

  // Trainable leaf; backward() writes d(root)/d(param) into param.grad.
  Var param(Parameter& p) { return push(Matrix{}, &p.value, &p, record_, {}); }

  const Matrix& value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.external ? *n.external : n.value;
  }

  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient buffer of a node; valid during and after backward().
  Matrix& grad(Var v) { return nodes_[v.id].grad; }
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

  // Appends an op result. fn is kept only when recording and some input
  // needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (Var in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(value), nullptr, nullptr, needs && record_, needs && record_ ? std::move(fn) : nullptr);
  }
  Var record(Matrix value, const std::vector<Var>& inputs, BackwardFn fn) {
    bool needs = false;
    for (Var in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(value), nullptr, nullptr, needs && record_, needs && record_ ? std::move(fn) : nullptr);
  }

  void backward(Var root, double seed = 1.0) {
    if (!record_) throw ContractError("backward: tape was built without recording");
    const Matrix& out = value(root);
    if (out.rows() != 1 || out.cols() != 1) {
      throw ContractError("backward: root must be scalar, got " + out.shape_string());
    }
    for (Node& n : nodes_) {
      if (!n.needs_grad) continue;
      const Matrix& v = n.external ? *n.external : n.value;
      if (n.grad.same_shape(v)) {
        n.grad.fill(0.0);
      } else {
        n.grad = Matrix(v.rows(), v.cols());
      }
    }
    for (Node& n : nodes_) {
      if (n.param) n.param->grad.fill(0.0);
    }
    if (!nodes_[root.id].needs_grad) return;
    nodes_[root.id].grad(0, 0) = seed;
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.needs_grad && n.backward) n.backward(*this, static_cast<std::uint32_t>(i));
    }
    for (Node& n : nodes_) {
      if (!n.param) continue;
      auto dst = n.param->grad.map();
      dst += n.grad.map();
    }
  }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Parameter* param = nullptr;
    bool needs_grad = false;
    BackwardFn backward;
    Matrix grad;
  };

  Var push(Matrix value, const Matrix* external, Parameter* param, bool needs_grad, BackwardFn fn) {
    if (nodes_.size() >= Var::kNone) throw ContractError("Tape: too many nodes");
    Node n;
    n.value = std::move(value);
    n.external = external;
    n.param = param;
    n.needs_grad = needs_grad;
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace telos::num
