#ifndef DMLE2E_GRAD_OPS_HPP
#define DMLE2E_GRAD_OPS_HPP

#include <cmath>
#include <span>
#include <vector>

#include "dmle2e/grad/tape.hpp"
#include "dmle2e/sigproc/filters.hpp"

// Differentiable primitives. Binary elementwise ops broadcast a 1x1, 1xC or Rx1
// operand against the other; the backward pass sums over broadcast dimensions.

namespace dmle2e::grad {

namespace detail {

template <typename Scalar>
MatrixX<Scalar> broadcast(const MatrixX<Scalar>& a, Eigen::Index rows, Eigen::Index cols) {
  if (a.rows() == rows && a.cols() == cols) return a;
  return a.replicate(rows / a.rows(), cols / a.cols());
}

inline Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b) {
  if (a == b || b == 1) return a;
  if (a == 1) return b;
  throw InvalidArgument("operand shapes are not broadcast-compatible");
}

template <typename Scalar>
Tape<Scalar>& same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) throw UsageError("operands live on different tapes");
  return *a.tape();
}

template <typename Scalar>
Scalar stable_sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  const auto r = detail::broadcast_dim(a.rows(), b.rows()), c = detail::broadcast_dim(a.cols(), b.cols());
  MatrixX<Scalar> v = detail::broadcast(a.value(), r, c) + detail::broadcast(b.value(), r, c);
  return t.record(std::move(v), {a, b}, "add", [](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), tp.grad(s));
    tp.accumulate(tp.parent(s, 1), tp.grad(s));
  });
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  const auto r = detail::broadcast_dim(a.rows(), b.rows()), c = detail::broadcast_dim(a.cols(), b.cols());
  MatrixX<Scalar> v = detail::broadcast(a.value(), r, c) - detail::broadcast(b.value(), r, c);
  return t.record(std::move(v), {a, b}, "sub", [](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), tp.grad(s));
    tp.accumulate(tp.parent(s, 1), -tp.grad(s));
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  const auto r = detail::broadcast_dim(a.rows(), b.rows()), c = detail::broadcast_dim(a.cols(), b.cols());
  MatrixX<Scalar> v = detail::broadcast(a.value(), r, c).cwiseProduct(detail::broadcast(b.value(), r, c));
  return t.record(std::move(v), {a, b}, "mul", [r, c](Tape<Scalar>& tp, std::size_t s) {
    const auto pa = tp.parent(s, 0), pb = tp.parent(s, 1);
    const MatrixX<Scalar>& g = tp.grad(s);
    if (tp.requires_grad(pa)) tp.accumulate(pa, g.cwiseProduct(detail::broadcast(tp.value(pb), r, c)));
    if (tp.requires_grad(pb)) tp.accumulate(pb, g.cwiseProduct(detail::broadcast(tp.value(pa), r, c)));
  });
}

template <typename Scalar>
Var<Scalar> div(const Var<Scalar>& a, const Var<Scalar>& b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  const auto r = detail::broadcast_dim(a.rows(), b.rows()), c = detail::broadcast_dim(a.cols(), b.cols());
  MatrixX<Scalar> v = detail::broadcast(a.value(), r, c).cwiseQuotient(detail::broadcast(b.value(), r, c));
  return t.record(std::move(v), {a, b}, "div", [r, c](Tape<Scalar>& tp, std::size_t s) {
    const auto pa = tp.parent(s, 0), pb = tp.parent(s, 1);
    const MatrixX<Scalar>& g = tp.grad(s);
    const MatrixX<Scalar> bb = detail::broadcast(tp.value(pb), r, c);
    if (tp.requires_grad(pa)) tp.accumulate(pa, g.cwiseQuotient(bb));
    if (tp.requires_grad(pb)) {
      const MatrixX<Scalar> aa = detail::broadcast(tp.value(pa), r, c);
      tp.accumulate(pb, -(g.array() * aa.array() / bb.array().square()).matrix());
    }
  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, const Var<Scalar>& b) { return mul(a, b); }
template <typename Scalar>
Var<Scalar> operator/(const Var<Scalar>& a, const Var<Scalar>& b) { return div(a, b); }

/// x * c for a constant c.
template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar c) {
  return x.tape()->record(x.value() * c, {x}, "scale", [c](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), tp.grad(s) * c);
  });
}

/// Affine layer building block: plain matrix product.
template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  if (a.cols() != b.rows()) throw InvalidArgument("matmul: inner dimensions differ");
  return t.record(a.value() * b.value(), {a, b}, "matmul", [](Tape<Scalar>& tp, std::size_t s) {
    const auto pa = tp.parent(s, 0), pb = tp.parent(s, 1);
    if (tp.requires_grad(pa)) tp.accumulate(pa, tp.grad(s) * tp.value(pb).transpose());
    if (tp.requires_grad(pb)) tp.accumulate(pb, tp.value(pa).transpose() * tp.grad(s));
  });
}

/// Column-wise "same" convolution of x (T x B) with taps (L x 1):
/// y[n] = sum_k taps[k] x[n + offset - k].
template <typename Scalar>
Var<Scalar> conv1d(const Var<Scalar>& x, const Var<Scalar>& taps, Eigen::Index offset) {
  Tape<Scalar>& t = detail::same_tape(x, taps);
  if (taps.cols() != 1) throw InvalidArgument("conv1d: taps must be a column vector");
  const MatrixX<Scalar>& xv = x.value();
  const VectorX<Scalar> h = taps.value().col(0);
  MatrixX<Scalar> y(xv.rows(), xv.cols());
  for (Eigen::Index b = 0; b < xv.cols(); ++b) y.col(b) = sigproc::convolve_same(xv.col(b), h, offset);
  return t.record(std::move(y), {x, taps}, "conv1d", [offset](Tape<Scalar>& tp, std::size_t s) {
    const auto px = tp.parent(s, 0), ph = tp.parent(s, 1);
    const MatrixX<Scalar>& g = tp.grad(s);
    const MatrixX<Scalar>& xv = tp.value(px);
    const VectorX<Scalar> h = tp.value(ph).col(0);
    const Eigen::Index len = h.size(), n = xv.rows();
    if (tp.requires_grad(px)) {
      // Adjoint of the convolution is correlation: the reversed kernel with mirrored offset.
      const VectorX<Scalar> rev = h.reverse();
      MatrixX<Scalar> gx(n, xv.cols());
      for (Eigen::Index b = 0; b < xv.cols(); ++b) gx.col(b) = sigproc::convolve_same(g.col(b), rev, len - 1 - offset);
      tp.accumulate(px, gx);
    }
    if (tp.requires_grad(ph)) {
      MatrixX<Scalar> gh = MatrixX<Scalar>::Zero(len, 1);
      for (Eigen::Index k = 0; k < len; ++k) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, k - offset);
        const Eigen::Index hi = std::min<Eigen::Index>(n, n + k - offset);
        if (hi <= lo) continue;
        gh(k, 0) = (g.middleRows(lo, hi - lo).array() * xv.middleRows(lo + offset - k, hi - lo).array()).sum();
      }
      tp.accumulate(ph, gh);
    }
  });
}

/// Zero-stuffing along rows: output row i*factor holds input row i.
template <typename Scalar>
Var<Scalar> upsample(const Var<Scalar>& x, Eigen::Index factor) {
  if (factor < 1) throw InvalidArgument("upsample factor must be >= 1");
  const MatrixX<Scalar>& xv = x.value();
  MatrixX<Scalar> y = MatrixX<Scalar>::Zero(xv.rows() * factor, xv.cols());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) y.row(i * factor) = xv.row(i);
  return x.tape()->record(std::move(y), {x}, "upsample", [factor](Tape<Scalar>& tp, std::size_t s) {
    const MatrixX<Scalar>& g = tp.grad(s);
    MatrixX<Scalar> gx(g.rows() / factor, g.cols());
    for (Eigen::Index i = 0; i < gx.rows(); ++i) gx.row(i) = g.row(i * factor);
    tp.accumulate(tp.parent(s, 0), gx);
  });
}

/// Keeps rows phase, phase+factor, ... (`count` of them).
template <typename Scalar>
Var<Scalar> downsample(const Var<Scalar>& x, Eigen::Index factor, Eigen::Index phase, Eigen::Index count) {
  if (factor < 1 || phase < 0 || count < 0 || (count > 0 && phase + (count - 1) * factor >= x.rows())) {
    throw InvalidArgument("downsample: selection exceeds the input");
  }
  const MatrixX<Scalar>& xv = x.value();
  MatrixX<Scalar> y(count, xv.cols());
  for (Eigen::Index i = 0; i < count; ++i) y.row(i) = xv.row(phase + i * factor);
  const Eigen::Index rows = xv.rows();
  return x.tape()->record(std::move(y), {x}, "downsample", [=](Tape<Scalar>& tp, std::size_t s) {
    const MatrixX<Scalar>& g = tp.grad(s);
    MatrixX<Scalar> gx = MatrixX<Scalar>::Zero(rows, g.cols());
    for (Eigen::Index i = 0; i < count; ++i) gx.row(phase + i * factor) = g.row(i);
    tp.accumulate(tp.parent(s, 0), gx);
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& x) {
  MatrixX<Scalar> y = x.value().unaryExpr([](Scalar v) { return detail::stable_sigmoid(v); });
  return x.tape()->record(std::move(y), {x}, "sigmoid", [](Tape<Scalar>& tp, std::size_t s) {
    const auto& y = tp.value(s);
    tp.accumulate(tp.parent(s, 0), (tp.grad(s).array() * y.array() * (Scalar(1) - y.array())).matrix());
  });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x) {
  MatrixX<Scalar> y = x.value().array().tanh().matrix();
  return x.tape()->record(std::move(y), {x}, "tanh", [](Tape<Scalar>& tp, std::size_t s) {
    const auto& y = tp.value(s);
    tp.accumulate(tp.parent(s, 0), (tp.grad(s).array() * (Scalar(1) - y.array().square())).matrix());
  });
}

template <typename Scalar>
Var<Scalar> exp(const Var<Scalar>& x) {
  return x.tape()->record(x.value().array().exp().matrix(), {x}, "exp", [](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), tp.grad(s).cwiseProduct(tp.value(s)));
  });
}

template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& x) {
  return x.tape()->record(x.value().array().log().matrix(), {x}, "log", [](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), tp.grad(s).cwiseQuotient(tp.value(tp.parent(s, 0))));
  });
}

template <typename Scalar>
Var<Scalar> square(const Var<Scalar>& x) {
  return x.tape()->record(x.value().array().square().matrix(), {x}, "square", [](Tape<Scalar>& tp, std::size_t s) {
    const auto p = tp.parent(s, 0);
    tp.accumulate(p, Scalar(2) * tp.grad(s).cwiseProduct(tp.value(p)));
  });
}

template <typename Scalar>
Var<Scalar> sqrt(const Var<Scalar>& x) {
  return x.tape()->record(x.value().array().sqrt().matrix(), {x}, "sqrt", [](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), (tp.grad(s).array() / (Scalar(2) * tp.value(s).array())).matrix());
  });
}

/// Mean over all entries -> 1x1.
template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& x) {
  const auto r = x.rows(), c = x.cols();
  return x.tape()->record(MatrixX<Scalar>::Constant(1, 1, x.value().mean()), {x}, "mean",
                          [r, c](Tape<Scalar>& tp, std::size_t s) {
                            const Scalar g = tp.grad(s)(0, 0) / static_cast<Scalar>(r * c);
                            tp.accumulate(tp.parent(s, 0), MatrixX<Scalar>::Constant(r, c, g));
                          });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  const auto r = x.rows(), c = x.cols();
  return x.tape()->record(MatrixX<Scalar>::Constant(1, 1, x.value().sum()), {x}, "sum",
                          [r, c](Tape<Scalar>& tp, std::size_t s) {
                            tp.accumulate(tp.parent(s, 0), MatrixX<Scalar>::Constant(r, c, tp.grad(s)(0, 0)));
                          });
}

/// Per-column mean of a T x B matrix -> 1 x B.
template <typename Scalar>
Var<Scalar> col_mean(const Var<Scalar>& x) {
  const auto r = x.rows();
  return x.tape()->record(x.value().colwise().mean(), {x}, "col_mean", [r](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), (tp.grad(s) / static_cast<Scalar>(r)).replicate(r, 1));
  });
}

/// Mean softmax cross-entropy of logits (N x C) against class labels.
template <typename Scalar>
Var<Scalar> softmax_xent(const Var<Scalar>& logits, std::span<const int> labels) {
  const MatrixX<Scalar>& z = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != z.rows()) throw InvalidArgument("softmax_xent: label count mismatch");
  const Eigen::Index n = z.rows();
  MatrixX<Scalar> prob(n, z.cols());
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= z.cols()) throw InvalidArgument("softmax_xent: label out of range");
    const Scalar m = z.row(i).maxCoeff();
    const auto e = (z.row(i).array() - m).exp();
    const Scalar denom = e.sum();
    prob.row(i) = e / denom;
    loss += std::log(denom) + m - z(i, label);
  }
  loss /= static_cast<Scalar>(n);
  std::vector<int> lab(labels.begin(), labels.end());
  return logits.tape()->record(MatrixX<Scalar>::Constant(1, 1, loss), {logits}, "softmax_xent",
                               [prob = std::move(prob), lab = std::move(lab)](Tape<Scalar>& tp, std::size_t s) {
                                 MatrixX<Scalar> g = prob;
                                 for (std::size_t i = 0; i < lab.size(); ++i) g(static_cast<Eigen::Index>(i), lab[i]) -= 1;
                                 g *= tp.grad(s)(0, 0) / static_cast<Scalar>(lab.size());
                                 tp.accumulate(tp.parent(s, 0), g);
                               });
}

/// low + (high - low) * sigmoid(theta): unconstrained -> open interval, saturating safely.
template <typename Scalar>
Var<Scalar> range_map(const Var<Scalar>& theta, Scalar low, Scalar high) {
  if (!(low < high)) throw InvalidArgument("range_map: low must be < high");
  const MatrixX<Scalar> sig = theta.value().unaryExpr([](Scalar v) { return detail::stable_sigmoid(v); });
  MatrixX<Scalar> y = (low + (high - low) * sig.array()).matrix();
  return theta.tape()->record(std::move(y), {theta}, "range_map",
                              [sig, span = high - low](Tape<Scalar>& tp, std::size_t s) {
                                tp.accumulate(tp.parent(s, 0),
                                              (tp.grad(s).array() * span * sig.array() * (Scalar(1) - sig.array())).matrix());
                              });
}

/// x + noise with the noise held constant (reparameterized sample).
template <typename Scalar>
Var<Scalar> add_noise(const Var<Scalar>& x, const MatrixX<Scalar>& noise) {
  if (noise.rows() != x.rows() || noise.cols() != x.cols()) throw InvalidArgument("add_noise: shape mismatch");
  return x.tape()->record(x.value() + noise, {x}, "add_noise", [](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), tp.grad(s));
  });
}

/// Table lookup: out(r, c) = table[index(r, c)], table is a column vector.
template <typename Scalar>
Var<Scalar> gather(const Var<Scalar>& table, const Eigen::MatrixXi& index) {
  if (table.cols() != 1) throw InvalidArgument("gather: table must be a column vector");
  if (index.size() > 0 && (index.minCoeff() < 0 || index.maxCoeff() >= table.rows())) {
    throw InvalidArgument("gather: index out of range");
  }
  const MatrixX<Scalar>& tv = table.value();
  MatrixX<Scalar> y(index.rows(), index.cols());
  for (Eigen::Index j = 0; j < index.cols(); ++j)
    for (Eigen::Index i = 0; i < index.rows(); ++i) y(i, j) = tv(index(i, j), 0);
  const Eigen::Index n_table = tv.rows();
  return table.tape()->record(std::move(y), {table}, "gather", [index, n_table](Tape<Scalar>& tp, std::size_t s) {
    const MatrixX<Scalar>& g = tp.grad(s);
    MatrixX<Scalar> gt = MatrixX<Scalar>::Zero(n_table, 1);
    for (Eigen::Index j = 0; j < index.cols(); ++j)
      for (Eigen::Index i = 0; i < index.rows(); ++i) gt(index(i, j), 0) += g(i, j);
    tp.accumulate(tp.parent(s, 0), gt);
  });
}

/// Column-major reinterpretation with the same number of entries.
template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& x, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != x.value().size()) throw InvalidArgument("reshape: size mismatch");
  MatrixX<Scalar> y = x.value().reshaped(rows, cols);
  const auto r0 = x.rows(), c0 = x.cols();
  return x.tape()->record(std::move(y), {x}, "reshape", [r0, c0](Tape<Scalar>& tp, std::size_t s) {
    tp.accumulate(tp.parent(s, 0), tp.grad(s).reshaped(r0, c0));
  });
}

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.rows()) throw InvalidArgument("slice_rows: range exceeds the input");
  const auto rows = x.rows();
  return x.tape()->record(x.value().middleRows(start, count), {x}, "slice_rows",
                          [=](Tape<Scalar>& tp, std::size_t s) {
                            MatrixX<Scalar> g = MatrixX<Scalar>::Zero(rows, tp.grad(s).cols());
                            g.middleRows(start, count) = tp.grad(s);
                            tp.accumulate(tp.parent(s, 0), g);
                          });
}

/// Stacks inputs vertically (equal column counts).
template <typename Scalar>
Var<Scalar> vstack(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw InvalidArgument("vstack: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw InvalidArgument("vstack: column counts differ");
    rows += p.rows();
  }
  MatrixX<Scalar> y(rows, cols);
  std::vector<Eigen::Index> starts;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    starts.push_back(at);
    y.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return parts.front().tape()->record(std::move(y), parts, "vstack", [starts](Tape<Scalar>& tp, std::size_t s) {
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const auto p = tp.parent(s, k);
      if (tp.requires_grad(p)) tp.accumulate(p, tp.grad(s).middleRows(starts[k], tp.value(p).rows()));
    }
  });
}

}  // namespace dmle2e::grad

#endif  // DMLE2E_GRAD_OPS_HPP
