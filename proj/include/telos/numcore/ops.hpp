#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "telos/numcore/matrix.hpp"
#include "telos/numcore/tape.hpp"

// Differentiable primitives recorded on a Tape. Each op computes its value
// eagerly and, when recording, registers a closure that accumulates adjoints
// into the inputs that need them.
namespace telos::num {

using RowIndex = std::vector<std::uint32_t>;
using RowIndexPtr = std::shared_ptr<const RowIndex>;

inline Var matmul(Tape& t, Var a, Var b) {
  Matrix out = matmul(t.value(a), t.value(b));
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const auto g = t.grad(Var{self}).map();
    if (t.needs_grad(a)) t.grad(a).map().noalias() += g * t.value(b).map().transpose();
    if (t.needs_grad(b)) t.grad(b).map().noalias() += t.value(a).map().transpose() * g;
  });
}

// a (n x c) + row vector b (1 x c) broadcast over rows.
inline Var add_bias(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw ShapeError("add_bias: " + av.shape_string() + " + " + bv.shape_string());
  }
  Matrix out = av;
  out.map().rowwise() += bv.map().row(0);
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const auto g = t.grad(Var{self}).map();
    if (t.needs_grad(a)) t.grad(a).map() += g;
    if (t.needs_grad(b)) t.grad(b).map() += g.colwise().sum();
  });
}

inline Var add(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  Matrix out = t.value(a);
  out.map() += t.value(b).map();
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const auto g = t.grad(Var{self}).map();
    if (t.needs_grad(a)) t.grad(a).map() += g;
    if (t.needs_grad(b)) t.grad(b).map() += g;
  });
}

inline Var sub(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "sub");
  Matrix out = t.value(a);
  out.map() -= t.value(b).map();
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const auto g = t.grad(Var{self}).map();
    if (t.needs_grad(a)) t.grad(a).map() += g;
    if (t.needs_grad(b)) t.grad(b).map() -= g;
  });
}

// Elementwise product.
inline Var mul(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "mul");
  Matrix out = t.value(a);
  out.map().array() *= t.value(b).map().array();
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const auto g = t.grad(Var{self}).map().array();
    if (t.needs_grad(a)) t.grad(a).map().array() += g * t.value(b).map().array();
    if (t.needs_grad(b)) t.grad(b).map().array() += g * t.value(a).map().array();
  });
}

inline Var scale(Tape& t, Var a, double s) {
  Matrix out = t.value(a);
  out.map() *= s;
  return t.record(std::move(out), {a}, [a, s](Tape& t, std::uint32_t self) {
    t.grad(a).map() += s * t.grad(Var{self}).map();
  });
}

inline Var add_scalar(Tape& t, Var a, double s) {
  Matrix out = t.value(a);
  out.map().array() += s;
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a).map() += t.grad(Var{self}).map();
  });
}

inline Var relu(Tape& t, Var a) {
  Matrix out = t.value(a);
  out.map() = out.map().cwiseMax(0.0);
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& x = t.value(a);
    const Matrix& g = t.grad(Var{self});
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

inline Var tanh(Tape& t, Var a) {
  Matrix out = t.value(a);
  out.map() = out.map().array().tanh().matrix();
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const auto y = t.value(Var{self}).map().array();
    t.grad(a).map().array() += t.grad(Var{self}).map().array() * (1.0 - y * y);
  });
}

inline Var exp(Tape& t, Var a) {
  Matrix out = t.value(a);
  out.map() = out.map().array().exp().matrix();
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a).map().array() += t.grad(Var{self}).map().array() * t.value(Var{self}).map().array();
  });
}

// log(1 + e^x), evaluated without overflow.
inline Var softplus(Tape& t, Var a) {
  const Matrix& x = t.value(a);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] > 0.0 ? x[i] + std::log1p(std::exp(-x[i])) : std::log1p(std::exp(x[i]));
  }
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& x = t.value(a);
    const Matrix& g = t.grad(Var{self});
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] / (1.0 + std::exp(-x[i]));
  });
}

inline Var square(Tape& t, Var a) {
  Matrix out = t.value(a);
  out.map() = out.map().array().square().matrix();
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a).map().array() += 2.0 * t.grad(Var{self}).map().array() * t.value(a).map().array();
  });
}

// Values outside [lo, hi] are clipped and pass no gradient.
inline Var clamp(Tape& t, Var a, double lo, double hi) {
  Matrix out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, out[i]));
  return t.record(std::move(out), {a}, [a, lo, hi](Tape& t, std::uint32_t self) {
    const Matrix& x = t.value(a);
    const Matrix& g = t.grad(Var{self});
    Matrix& ga = t.grad(a);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) ga[i] += g[i];
    }
  });
}

// Elementwise minimum; ties route the gradient to the first argument.
inline Var minimum(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "minimum");
  Matrix out = t.value(a);
  out.map() = out.map().cwiseMin(t.value(b).map());
  return t.record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Matrix& av = t.value(a);
    const Matrix& bv = t.value(b);
    const Matrix& g = t.grad(Var{self});
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] <= bv[i]) {
        if (t.needs_grad(a)) t.grad(a)[i] += g[i];
      } else if (t.needs_grad(b)) {
        t.grad(b)[i] += g[i];
      }
    }
  });
}

inline Var concat_cols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = t.value(parts.front()).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) {
      throw ShapeError("concat_cols: row mismatch " + t.value(p).shape_string() + " vs " + std::to_string(rows));
    }
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    out.map().middleCols(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(v.cols())) = v.map();
    offset += v.cols();
  }
  return t.record(std::move(out), parts, [parts](Tape& t, std::uint32_t self) {
    const auto g = t.grad(Var{self}).map();
    std::size_t offset = 0;
    for (Var p : parts) {
      const auto c = static_cast<Eigen::Index>(t.value(p).cols());
      if (t.needs_grad(p)) t.grad(p).map() += g.middleCols(static_cast<Eigen::Index>(offset), c);
      offset += static_cast<std::size_t>(c);
    }
  });
}

inline Var slice_cols(Tape& t, Var a, std::size_t start, std::size_t count) {
  const Matrix& v = t.value(a);
  if (start + count > v.cols()) throw ShapeError("slice_cols: out of range on " + v.shape_string());
  Matrix out(v.rows(), count);
  out.map() = v.map().middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count));
  return t.record(std::move(out), {a}, [a, start, count](Tape& t, std::uint32_t self) {
    t.grad(a).map().middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) +=
        t.grad(Var{self}).map();
  });
}

// out.row(k) = a.row(index[k]).
inline Var gather_rows(Tape& t, Var a, RowIndexPtr index) {
  const Matrix& v = t.value(a);
  Matrix out(index->size(), v.cols());
  for (std::size_t k = 0; k < index->size(); ++k) {
    const auto src = (*index)[k];
    if (src >= v.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(v.row(src).data(), v.cols(), out.row(k).data());
  }
  return t.record(std::move(out), {a}, [a, index](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(Var{self});
    Matrix& ga = t.grad(a);
    for (std::size_t k = 0; k < index->size(); ++k) {
      auto dst = ga.row((*index)[k]);
      auto src = g.row(k);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

// out.row(s) = sum of a.row(k) over k with segment[k] == s.
inline Var segment_sum(Tape& t, Var a, RowIndexPtr segment, std::size_t num_segments) {
  const Matrix& v = t.value(a);
  if (segment->size() != v.rows()) throw ShapeError("segment_sum: segment ids do not match rows");
  Matrix out(num_segments, v.cols());
  for (std::size_t k = 0; k < v.rows(); ++k) {
    const auto s = (*segment)[k];
    if (s >= num_segments) throw ShapeError("segment_sum: segment id out of range");
    auto dst = out.row(s);
    auto src = v.row(k);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  return t.record(std::move(out), {a}, [a, segment](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(Var{self});
    Matrix& ga = t.grad(a);
    for (std::size_t k = 0; k < segment->size(); ++k) {
      auto dst = ga.row(k);
      auto src = g.row((*segment)[k]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

// Softmax of an (n x 1) score column within each segment.
inline Var segment_softmax(Tape& t, Var scores, RowIndexPtr segment, std::size_t num_segments) {
  const Matrix& s = t.value(scores);
  if (s.cols() != 1 || segment->size() != s.rows()) throw ShapeError("segment_softmax: expects n x 1 scores");
  std::vector<double> peak(num_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < s.rows(); ++k) peak[(*segment)[k]] = std::max(peak[(*segment)[k]], s[k]);
  std::vector<double> total(num_segments, 0.0);
  Matrix out(s.rows(), 1);
  for (std::size_t k = 0; k < s.rows(); ++k) {
    out[k] = std::exp(s[k] - peak[(*segment)[k]]);
    total[(*segment)[k]] += out[k];
  }
  for (std::size_t k = 0; k < s.rows(); ++k) out[k] /= total[(*segment)[k]];
  return t.record(std::move(out), {scores}, [scores, segment, num_segments](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(Var{self});
    const Matrix& g = t.grad(Var{self});
    std::vector<double> dot(num_segments, 0.0);
    for (std::size_t k = 0; k < y.rows(); ++k) dot[(*segment)[k]] += g[k] * y[k];
    Matrix& gs = t.grad(scores);
    for (std::size_t k = 0; k < y.rows(); ++k) gs[k] += y[k] * (g[k] - dot[(*segment)[k]]);
  });
}

// Multiplies row k of a by the scalar w[k] (w is n x 1).
inline Var scale_rows(Tape& t, Var a, Var w) {
  const Matrix& v = t.value(a);
  const Matrix& wv = t.value(w);
  if (wv.cols() != 1 || wv.rows() != v.rows()) {
    throw ShapeError("scale_rows: " + v.shape_string() + " by " + wv.shape_string());
  }
  Matrix out = v;
  out.map().array().colwise() *= wv.map().col(0).array();
  return t.record(std::move(out), {a, w}, [a, w](Tape& t, std::uint32_t self) {
    const auto g = t.grad(Var{self}).map();
    if (t.needs_grad(a)) t.grad(a).map().array() += g.array().colwise() * t.value(w).map().col(0).array();
    if (t.needs_grad(w)) t.grad(w).map().col(0) += g.cwiseProduct(t.value(a).map()).rowwise().sum();
  });
}

// Row-major reinterpretation to rows x cols.
inline Var reshape(Tape& t, Var a, std::size_t rows, std::size_t cols) {
  const Matrix& v = t.value(a);
  if (rows * cols != v.size()) {
    throw ShapeError("reshape: " + v.shape_string() + " to " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  Matrix out(rows, cols, v.values());
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(Var{self});
    Matrix& ga = t.grad(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
  });
}

inline Var row_sum(Tape& t, Var a) {
  const Matrix& v = t.value(a);
  Matrix out(v.rows(), 1);
  out.map().col(0) = v.map().rowwise().sum();
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a).map().colwise() += t.grad(Var{self}).map().col(0);
  });
}

inline Var sum_all(Tape& t, Var a) {
  Matrix out(1, 1, t.value(a).map().sum());
  return t.record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    t.grad(a).map().array() += t.grad(Var{self})(0, 0);
  });
}

inline Var mean_all(Tape& t, Var a) {
  const double n = static_cast<double>(t.value(a).size());
  if (n == 0) throw ShapeError("mean_all: empty input");
  return scale(t, sum_all(t, a), 1.0 / n);
}

}  // namespace telos::num
