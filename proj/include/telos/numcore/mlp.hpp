#pragma once

#include <random>
#include <string>
#include <unordered_map>

#include "telos/numcore/init.hpp"
#include "telos/numcore/ops.hpp"
#include "telos/numcore/param_store.hpp"
#include "telos/numcore/tape.hpp"

namespace telos::num {

enum class Activation { relu, tanh, none };

// Resolves parameter names to tape leaves, once per tape. A binder over a
// const store (or with trainable=false) yields leaves that take no gradient.
class Binder {
 public:
  Binder(Tape& tape, ParamStore& store, bool trainable = true)
      : tape_(tape), store_(&store), const_store_(&store), trainable_(trainable) {}
  Binder(Tape& tape, const ParamStore& store) : tape_(tape), const_store_(&store), trainable_(false) {}

  Var operator()(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    Var v = trainable_ ? tape_.param(store_->at(name)) : tape_.frozen(const_store_->at(name).value);
    cache_.emplace(name, v);
    return v;
  }

  const Matrix& value(const std::string& name) const { return const_store_->at(name).value; }
  bool has(const std::string& name) const { return const_store_->contains(name); }
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  ParamStore* store_ = nullptr;
  const ParamStore* const_store_ = nullptr;
  bool trainable_;
  std::unordered_map<std::string, Var> cache_;
};

struct MlpShape {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;

  std::size_t param_count() const { return in * hidden + hidden + hidden * out + out; }
};

inline Var apply(Tape& t, Var x, Activation act) {
  switch (act) {
    case Activation::relu:
      return relu(t, x);
    case Activation::tanh:
      return tanh(t, x);
    case Activation::none:
      return x;
  }
  return x;
}

inline Var linear(Binder& p, const std::string& prefix, Var x) {
  Tape& t = p.tape();
  return add_bias(t, matmul(t, x, p(prefix + "/w")), p(prefix + "/b"));
}

inline void add_linear(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                       std::mt19937_64& rng) {
  store.add(prefix + "/w", xavier_init(in, out, rng));
  store.add(prefix + "/b", Matrix(1, out));
}

// prefix/w1 (in x hidden), prefix/b1, prefix/w2 (hidden x out), prefix/b2.
inline void add_mlp(ParamStore& store, const std::string& prefix, const MlpShape& shape, std::mt19937_64& rng) {
  store.add(prefix + "/w1", xavier_init(shape.in, shape.hidden, rng));
  store.add(prefix + "/b1", Matrix(1, shape.hidden));
  store.add(prefix + "/w2", xavier_init(shape.hidden, shape.out, rng));
  store.add(prefix + "/b2", Matrix(1, shape.out));
}

// Hidden layer only: act(x W1 + b1).
inline Var mlp_hidden(Binder& p, const std::string& prefix, Var x, Activation act) {
  Tape& t = p.tape();
  const Matrix& w1 = p.value(prefix + "/w1");
  if (t.value(x).cols() != w1.rows()) {
    throw ShapeError("mlp '" + prefix + "': input " + t.value(x).shape_string() + " vs W1 " + w1.shape_string());
  }
  return apply(t, add_bias(t, matmul(t, x, p(prefix + "/w1")), p(prefix + "/b1")), act);
}

// Row-wise act(x W1 + b1) W2 + b2.
inline Var mlp_forward(Binder& p, const std::string& prefix, Var x, Activation act) {
  Tape& t = p.tape();
  Var h = mlp_hidden(p, prefix, x, act);
  return add_bias(t, matmul(t, h, p(prefix + "/w2")), p(prefix + "/b2"));
}

inline Matrix mlp_forward(const ParamStore& store, const std::string& prefix, const Matrix& x, Activation act) {
  Tape t(false);
  Binder p(t, store);
  return t.value(mlp_forward(p, prefix, t.constant(x), act));
}

}  // namespace telos::num
