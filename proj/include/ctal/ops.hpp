#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "ctal/graph.hpp"

// Expression-style free functions over Var handles. Every op computes its
// value eagerly and records a closure that routes gradients to its inputs.
// All tensors are viewed as matrices: leading dims collapse into rows, the
// last dim is columns; rank-1 tensors act as a single row.

namespace ctal {

namespace detail {

template <typename S>
inline Eigen::Map<MatX<S>> grad_mat(Graph<S>& g, int id, Index r, Index c) {
  return Eigen::Map<MatX<S>>(g.grad(id).data(), r, c);
}

template <typename S>
inline void check_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

}  // namespace detail

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  detail::check_same_shape(a.value(), b.value(), "add");
  Tensor<S> out(a.value().shape());
  out.flat() = a.value().flat() + b.value().flat();
  return a.g->make(std::move(out), {a.id, b.id}, [](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    g.accum(in[0], g.grad(self));
    g.accum(in[1], g.grad(self));
  }, "add");
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  detail::check_same_shape(a.value(), b.value(), "sub");
  Tensor<S> out(a.value().shape());
  out.flat() = a.value().flat() - b.value().flat();
  return a.g->make(std::move(out), {a.id, b.id}, [](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    g.accum(in[0], g.grad(self));
    g.accum_expr(in[1], -g.grad(self));
  }, "sub");
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  detail::check_same_shape(a.value(), b.value(), "mul");
  Tensor<S> out(a.value().shape());
  out.flat() = a.value().flat() * b.value().flat();
  return a.g->make(std::move(out), {a.id, b.id}, [](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    g.accum_expr(in[0], g.grad(self) * g.val(in[1]).flat());
    g.accum_expr(in[1], g.grad(self) * g.val(in[0]).flat());
  }, "mul");
}

template <typename S>
Var<S> div(Var<S> a, Var<S> b) {
  detail::check_same_shape(a.value(), b.value(), "div");
  Tensor<S> out(a.value().shape());
  out.flat() = a.value().flat() / b.value().flat();
  return a.g->make(std::move(out), {a.id, b.id}, [](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    const auto& bv = g.val(in[1]).flat();
    g.accum_expr(in[0], g.grad(self) / bv);
    g.accum_expr(in[1], -g.grad(self) * g.val(in[0]).flat() / (bv * bv));
  }, "div");
}

template <typename S>
Var<S> scale(Var<S> x, double s) {
  Tensor<S> out(x.value().shape());
  out.flat() = x.value().flat() * static_cast<S>(s);
  return x.g->make(std::move(out), {x.id}, [s](Graph<S>& g, int self) {
    g.accum_expr(g.node(self).inputs[0], g.grad(self) * static_cast<S>(s));
  }, "scale");
}

template <typename S>
Var<S> neg(Var<S> x) { return scale(x, -1.0); }

// x [r x c] + bias broadcast over rows (bias has c elements).
template <typename S>
Var<S> add_bias(Var<S> x, Var<S> b) {
  const Index r = x.value().rows(), c = x.value().cols();
  if (b.value().numel() != c)
    throw DimensionError("add_bias: bias length " + std::to_string(b.value().numel()) +
                         " vs " + std::to_string(c) + " columns");
  Tensor<S> out(x.value().shape());
  out.mat() = x.value().mat();
  out.mat().rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(b.value().data(), c);
  return x.g->make(std::move(out), {x.id, b.id}, [r, c](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    g.accum(in[0], g.grad(self));
    if (g.wants_grad(in[1])) {
      Eigen::Map<const MatX<S>> gy(g.grad(self).data(), r, c);
      Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(g.grad(in[1]).data(), c) +=
          gy.colwise().sum();
    }
  }, "add_bias");
}

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() > 2 || bv.rank() > 2)
    throw DimensionError("matmul expects rank <= 2 operands");
  if (av.cols() != bv.rows())
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(av.shape()) +
                         " x " + shape_str(bv.shape()));
  const Index m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor<S> out({m, n});
  out.mat().noalias() = av.mat() * bv.mat();
  return a.g->make(std::move(out), {a.id, b.id}, [m, k, n](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), m, n);
    if (g.wants_grad(in[0]))
      detail::grad_mat(g, in[0], m, k).noalias() += gy * g.val(in[1]).mat().transpose();
    if (g.wants_grad(in[1]))
      detail::grad_mat(g, in[1], k, n).noalias() += g.val(in[0]).mat().transpose() * gy;
  }, "matmul");
}

template <typename S>
Var<S> transpose(Var<S> x) {
  const Index r = x.value().rows(), c = x.value().cols();
  Tensor<S> out({c, r});
  out.mat() = x.value().mat().transpose();
  return x.g->make(std::move(out), {x.id}, [r, c](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), c, r);
    detail::grad_mat(g, in[0], r, c) += gy.transpose();
  }, "transpose");
}

// Gather rows of a table by index; the embedding lookup.
template <typename S>
Var<S> rows_lookup(Var<S> table, std::vector<int> ids) {
  const Index v = table.value().rows(), h = table.value().cols();
  const Index t = static_cast<Index>(ids.size());
  for (int id : ids)
    if (id < 0 || id >= v)
      throw DimensionError("rows_lookup: index " + std::to_string(id) +
                           " out of range for table with " + std::to_string(v) + " rows");
  Tensor<S> out({t, h});
  for (Index i = 0; i < t; ++i) out.mat().row(i) = table.value().mat().row(ids[i]);
  return table.g->make(std::move(out), {table.id},
                       [ids = std::move(ids), t, h, v](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), t, h);
    auto gt = detail::grad_mat(g, in[0], v, h);
    for (Index i = 0; i < t; ++i) gt.row(ids[i]) += gy.row(i);
  }, "rows_lookup");
}

// Gather a subset of rows of x (scatter-add on backward).
template <typename S>
Var<S> select_rows(Var<S> x, std::vector<int> rows) {
  const Index r = x.value().rows(), c = x.value().cols();
  const Index k = static_cast<Index>(rows.size());
  for (int i : rows)
    if (i < 0 || i >= r)
      throw DimensionError("select_rows: row " + std::to_string(i) + " out of range");
  Tensor<S> out({k, c});
  for (Index i = 0; i < k; ++i) out.mat().row(i) = x.value().mat().row(rows[i]);
  return x.g->make(std::move(out), {x.id},
                   [rows = std::move(rows), r, c, k](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), k, c);
    auto gx = detail::grad_mat(g, in[0], r, c);
    for (Index i = 0; i < k; ++i) gx.row(rows[i]) += gy.row(i);
  }, "select_rows");
}

template <typename S>
Var<S> slice_rows(Var<S> x, Index r0, Index n) {
  const Index r = x.value().rows(), c = x.value().cols();
  if (r0 < 0 || n < 0 || r0 + n > r) throw DimensionError("slice_rows out of range");
  Tensor<S> out({n, c});
  out.mat() = x.value().mat().middleRows(r0, n);
  return x.g->make(std::move(out), {x.id}, [r0, n, r, c](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), n, c);
    detail::grad_mat(g, in[0], r, c).middleRows(r0, n) += gy;
  }, "slice_rows");
}

template <typename S>
Var<S> slice_cols(Var<S> x, Index c0, Index n) {
  const Index r = x.value().rows(), c = x.value().cols();
  if (c0 < 0 || n < 0 || c0 + n > c) throw DimensionError("slice_cols out of range");
  Tensor<S> out({r, n});
  out.mat() = x.value().mat().middleCols(c0, n);
  return x.g->make(std::move(out), {x.id}, [c0, n, r, c](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), r, n);
    detail::grad_mat(g, in[0], r, c).middleCols(c0, n) += gy;
  }, "slice_cols");
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Graph<S>* g = parts[0].g;
  const Index r = parts[0].value().rows();
  Index total = 0;
  std::vector<int> ids;
  std::vector<Index> widths;
  for (const auto& p : parts) {
    if (p.value().rows() != r) throw DimensionError("concat_cols: row count mismatch");
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor<S> out({r, total});
  Index c0 = 0;
  for (const auto& p : parts) {
    out.mat().middleCols(c0, p.value().cols()) = p.value().mat();
    c0 += p.value().cols();
  }
  return g->make(std::move(out), std::move(ids),
                 [widths = std::move(widths), r, total](Graph<S>& g2, int self) {
    Eigen::Map<const MatX<S>> gy(g2.grad(self).data(), r, total);
    const auto& in = g2.node(self).inputs;
    Index c0 = 0;
    for (size_t i = 0; i < in.size(); ++i) {
      if (g2.wants_grad(in[i]))
        detail::grad_mat(g2, in[i], r, widths[i]) += gy.middleCols(c0, widths[i]);
      c0 += widths[i];
    }
  }, "concat_cols");
}

// Row-wise softmax with optional boolean mask (row-major r*c entries; true =
// position participates). Masked entries are exactly zero in the output. A
// row with no unmasked entry is degenerate attention and throws.
template <typename S>
Var<S> softmax_rows(Var<S> x, const std::vector<uint8_t>* mask = nullptr) {
  const Index r = x.value().rows(), c = x.value().cols();
  if (mask && static_cast<Index>(mask->size()) != r * c)
    throw DimensionError("softmax_rows: mask size mismatch");
  Tensor<S> out({r, c});
  for (Index i = 0; i < r; ++i) {
    S mx = std::numeric_limits<S>::lowest();
    bool any = false;
    for (Index j = 0; j < c; ++j) {
      if (mask && !(*mask)[i * c + j]) continue;
      any = true;
      mx = std::max(mx, x.value().at(i, j));
    }
    if (!any)
      throw DegenerateAttentionError("softmax row " + std::to_string(i) +
                                     " is fully masked");
    S sum = 0;
    for (Index j = 0; j < c; ++j) {
      if (mask && !(*mask)[i * c + j]) {
        out.at(i, j) = 0;
        continue;
      }
      S e = std::exp(x.value().at(i, j) - mx);
      out.at(i, j) = e;
      sum += e;
    }
    for (Index j = 0; j < c; ++j) out.at(i, j) /= sum;
  }
  Tensor<S> saved = out;  // y is enough to backprop softmax
  return x.g->make(std::move(out), {x.id}, [saved = std::move(saved), r, c](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), r, c);
    auto gx = detail::grad_mat(g, in[0], r, c);
    const auto y = saved.mat();
    for (Index i = 0; i < r; ++i) {
      S dot = gy.row(i).cwiseProduct(y.row(i)).sum();
      gx.row(i) += y.row(i).cwiseProduct(gy.row(i) - Eigen::Matrix<S, 1, Eigen::Dynamic>::Constant(c, dot));
    }
  }, "softmax_rows");
}

// Convenience: one validity flag per column (key), broadcast to all rows.
template <typename S>
Var<S> softmax_rows_keymask(Var<S> x, const std::vector<uint8_t>& key_valid) {
  const Index r = x.value().rows(), c = x.value().cols();
  if (static_cast<Index>(key_valid.size()) != c)
    throw DimensionError("softmax_rows_keymask: key mask length mismatch");
  std::vector<uint8_t> full(static_cast<size_t>(r * c));
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) full[i * c + j] = key_valid[j];
  return softmax_rows(x, &full);
}

// Per-row normalization over the last axis with affine gain/shift.
template <typename S>
Var<S> layer_norm(Var<S> x, Var<S> gamma, Var<S> beta, double eps) {
  const Index r = x.value().rows(), c = x.value().cols();
  if (gamma.value().numel() != c || beta.value().numel() != c)
    throw DimensionError("layer_norm: gamma/beta length must equal last dim " +
                         std::to_string(c));
  Tensor<S> out({r, c});
  MatX<S> xhat(r, c);
  VecX<S> inv_std(r);
  Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>> gmap(gamma.value().data(), c);
  Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>> bmap(beta.value().data(), c);
  for (Index i = 0; i < r; ++i) {
    auto row = x.value().mat().row(i);
    S mu = row.mean();
    S var = (row.array() - mu).square().mean();
    S is = S(1) / std::sqrt(var + static_cast<S>(eps));
    inv_std[i] = is;
    xhat.row(i) = (row.array() - mu).matrix() * is;
    out.mat().row(i) = xhat.row(i).cwiseProduct(gmap) + bmap;
  }
  return x.g->make(std::move(out), {x.id, gamma.id, beta.id},
                   [xhat = std::move(xhat), inv_std = std::move(inv_std), r, c](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    Eigen::Map<const MatX<S>> gy(g.grad(self).data(), r, c);
    Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>> gmap(g.val(in[1]).data(), c);
    if (g.wants_grad(in[1])) {
      auto gg = Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(g.grad(in[1]).data(), c);
      gg += gy.cwiseProduct(xhat).colwise().sum();
    }
    if (g.wants_grad(in[2])) {
      auto gb = Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(g.grad(in[2]).data(), c);
      gb += gy.colwise().sum();
    }
    if (g.wants_grad(in[0])) {
      auto gx = detail::grad_mat(g, in[0], r, c);
      for (Index i = 0; i < r; ++i) {
        Eigen::Matrix<S, 1, Eigen::Dynamic> dxhat = gy.row(i).cwiseProduct(gmap);
        S m1 = dxhat.mean();
        S m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
        gx.row(i) += inv_std[i] * (dxhat.array() - m1 - xhat.row(i).array() * m2).matrix();
      }
    }
  }, "layer_norm");
}

namespace detail {
inline constexpr double kInvSqrt2 = 0.7071067811865475244;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace detail

namespace detail {
template <typename S>
inline VecX<S> norm_cdf(const VecX<S>& x) {
  return x.unaryExpr([](S v) {
    return static_cast<S>(0.5 * (1.0 + std::erf(static_cast<double>(v) * kInvSqrt2)));
  });
}
}  // namespace detail

// Exact (erf-based) GELU.
template <typename S>
Var<S> gelu(Var<S> x) {
  Tensor<S> out(x.value().shape());
  const auto& xv = x.value().flat();
  out.flat() = xv * detail::norm_cdf<S>(xv);
  return x.g->make(std::move(out), {x.id}, [](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    const auto& xv = g.val(in[0]).flat();
    VecX<S> cdf = detail::norm_cdf<S>(xv);
    VecX<S> pdf = static_cast<S>(detail::kInvSqrt2Pi) * (-S(0.5) * xv * xv).exp();
    g.accum_expr(in[0], g.grad(self) * (cdf + xv * pdf));
  }, "gelu");
}

template <typename S>
Var<S> tanh_op(Var<S> x) {
  Tensor<S> out(x.value().shape());
  out.flat() = x.value().flat().tanh();
  Tensor<S> y = out;
  return x.g->make(std::move(out), {x.id}, [y = std::move(y)](Graph<S>& g, int self) {
    g.accum_expr(g.node(self).inputs[0], g.grad(self) * (S(1) - y.flat() * y.flat()));
  }, "tanh");
}

template <typename S>
Var<S> sqrt_op(Var<S> x) {
  Tensor<S> out(x.value().shape());
  out.flat() = x.value().flat().sqrt();
  Tensor<S> y = out;
  return x.g->make(std::move(out), {x.id}, [y = std::move(y)](Graph<S>& g, int self) {
    g.accum_expr(g.node(self).inputs[0], g.grad(self) / (S(2) * y.flat()));
  }, "sqrt");
}

template <typename S>
Var<S> abs_op(Var<S> x) {
  Tensor<S> out(x.value().shape());
  out.flat() = x.value().flat().abs();
  return x.g->make(std::move(out), {x.id}, [](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    g.accum_expr(in[0], g.grad(self) * g.val(in[0]).flat().sign());
  }, "abs");
}

template <typename S>
Var<S> sum(Var<S> x) {
  Tensor<S> out = Tensor<S>::scalar(x.value().flat().sum());
  return x.g->make(std::move(out), {x.id}, [](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    g.grad(in[0]) += VecX<S>::Constant(g.val(in[0]).numel(), g.grad(self)[0]);
  }, "sum");
}

template <typename S>
Var<S> mean(Var<S> x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.value().numel()));
}

template <typename S>
Var<S> dot(Var<S> a, Var<S> b) { return sum(mul(a, b)); }

// Column-wise max over rows flagged valid -> [1 x c]. Gradient flows to the
// winning row of each column (first occurrence on ties).
template <typename S>
Var<S> max_rows(Var<S> x, const std::vector<uint8_t>& valid) {
  const Index r = x.value().rows(), c = x.value().cols();
  if (static_cast<Index>(valid.size()) != r)
    throw DimensionError("max_rows: validity mask length mismatch");
  std::vector<Index> arg(c, -1);
  Tensor<S> out({Index(1), c});
  bool any = false;
  for (Index i = 0; i < r; ++i) {
    if (!valid[i]) continue;
    any = true;
    for (Index j = 0; j < c; ++j) {
      if (arg[j] < 0 || x.value().at(i, j) > out.at(0, j)) {
        out.at(0, j) = x.value().at(i, j);
        arg[j] = i;
      }
    }
  }
  if (!any) throw DegenerateAttentionError("max_rows over an empty row set");
  return x.g->make(std::move(out), {x.id}, [arg = std::move(arg), c](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    auto gx = detail::grad_mat(g, in[0], g.val(in[0]).rows(), c);
    const auto& gy = g.grad(self);
    for (Index j = 0; j < c; ++j) gx(arg[j], j) += gy[j];
  }, "max_rows");
}

// Sum of per-row cross-entropies between logits and integer targets.
template <typename S>
Var<S> cross_entropy_sum(Var<S> logits, std::vector<int> targets) {
  const Index k = logits.value().rows(), v = logits.value().cols();
  if (static_cast<Index>(targets.size()) != k)
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(k) + " rows");
  MatX<S> probs(k, v);
  S total = 0;
  for (Index i = 0; i < k; ++i) {
    if (targets[i] < 0 || targets[i] >= v)
      throw DimensionError("cross_entropy: target " + std::to_string(targets[i]) +
                           " out of range for " + std::to_string(v) + " classes");
    auto row = logits.value().mat().row(i);
    S mx = row.maxCoeff();
    VecX<S> e = (row.array() - mx).exp();
    S z = e.sum();
    probs.row(i) = (e / z).matrix();
    total += std::log(z) + mx - row[targets[i]];
  }
  Tensor<S> out = Tensor<S>::scalar(total);
  return logits.g->make(std::move(out), {logits.id},
                        [probs = std::move(probs), targets = std::move(targets), k, v](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    S gy = g.grad(self)[0];
    auto gx = detail::grad_mat(g, in[0], k, v);
    gx += gy * probs;
    for (Index i = 0; i < k; ++i) gx(i, targets[i]) -= gy;
  }, "cross_entropy");
}

template <typename S>
Var<S> cross_entropy_mean(Var<S> logits, std::vector<int> targets) {
  const double k = static_cast<double>(logits.value().rows());
  return scale(cross_entropy_sum(logits, std::move(targets)), 1.0 / k);
}

// Sum of absolute deviations against a fixed target tensor.
template <typename S>
Var<S> l1_sum(Var<S> pred, Tensor<S> target) {
  detail::check_same_shape(pred.value(), target, "l1");
  Tensor<S> out = Tensor<S>::scalar((pred.value().flat() - target.flat()).abs().sum());
  return pred.g->make(std::move(out), {pred.id},
                      [target = std::move(target)](Graph<S>& g, int self) {
    const auto& in = g.node(self).inputs;
    if (!g.wants_grad(in[0])) return;
    g.accum_expr(in[0], g.grad(self)[0] * (g.val(in[0]).flat() - target.flat()).sign());
  }, "l1");
}

template <typename S>
Var<S> l1_mean(Var<S> pred, Tensor<S> target) {
  const double n = static_cast<double>(pred.value().numel());
  return scale(l1_sum(pred, std::move(target)), 1.0 / n);
}

// Inverted dropout; identity when disabled so eval graphs carry no noise.
template <typename S>
Var<S> dropout(Var<S> x, double rate, Rng& rng, bool train) {
  if (!train || rate <= 0.0) return x;
  if (rate >= 1.0) throw Error("dropout rate must be < 1");
  const S keep_inv = static_cast<S>(1.0 / (1.0 - rate));
  VecX<S> mask(x.value().numel());
  for (Index i = 0; i < mask.size(); ++i)
    mask[i] = bernoulli(rng, rate) ? S(0) : keep_inv;
  Tensor<S> out(x.value().shape());
  out.flat() = x.value().flat() * mask;
  return x.g->make(std::move(out), {x.id}, [mask = std::move(mask)](Graph<S>& g, int self) {
    g.accum_expr(g.node(self).inputs[0], g.grad(self) * mask);
  }, "dropout");
}

// y = x W + b with W stored [in x out].
template <typename S>
Var<S> linear(Var<S> x, Var<S> w, Var<S> b) {
  return add_bias(matmul(x, w), b);
}

}  // namespace ctal
