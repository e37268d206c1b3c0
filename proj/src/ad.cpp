#include "smoothflow/ad.hpp"

#include <cmath>

namespace smoothflow::ad {

namespace {

std::string shape(const Array& a) { return std::to_string(a.rows()) + "x" + std::to_string(a.cols()); }

// x^p for integer p is much cheaper by repeated multiplication.
Array ipow(const Array& x, double p) {
  const double r = std::round(p);
  if (r != p || std::abs(r) > 8) return x.pow(p);
  const int n = static_cast<int>(std::abs(r));
  Array acc = Array::Ones(x.rows(), x.cols());
  for (int i = 0; i < n; ++i) acc *= x;
  return r < 0 ? Array(acc.inverse()) : acc;
}

Array zeros_like(const Array& a) { return Array::Zero(a.rows(), a.cols()); }

}  // namespace

void check_same_shape(const Array& a, const Array& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string("shape mismatch in '") + op + "': " + shape(a) + " vs " + shape(b));
}

Array rampw_eval(const RampW& r, const Array& t, int n) {
  const Array s = 1.0 - t;
  if (r.kind == RampKind::Exponential) {
    double c = 1.0;
    for (int i = 0; i < n; ++i) c *= r.beta + i;
    const double p = -(r.beta + n);
    const double sign = n % 2 == 1 ? 1.0 : -1.0;
    return c * (ipow(s, p) + sign * ipow(t, p));
  }
  if (n == 0) return t.log() - s.log();
  double f = 1.0;
  for (int i = 2; i < n; ++i) f *= i;
  const double sign = n % 2 == 1 ? 1.0 : -1.0;
  return f * (sign * ipow(t, -n) + ipow(s, -n));
}

// ---------------------------------------------------------------- Tensor

Tensor where(const Mask& m, const Tensor& a, const Tensor& b) {
  check_same_shape(a.v, b.v, "where");
  return Tensor(m.select(a.v, b.v));
}

Tensor repcols(const Tensor& a, Eigen::Index m) {
  if (a.cols() != 1) throw std::invalid_argument("repcols expects a column, got " + shape(a.v));
  return Tensor(a.v.replicate(1, m));
}

Tensor rowsum(const Tensor& a) { return Tensor(a.v.rowwise().sum()); }

Tensor cols(const Tensor& a, Eigen::Index start, Eigen::Index count, Eigen::Index stride) {
  if (start < 0 || count < 0 || (count > 0 && start + (count - 1) * stride >= a.cols()))
    throw std::invalid_argument("column slice out of range for " + shape(a.v));
  Array out(a.rows(), count);
  for (Eigen::Index j = 0; j < count; ++j) out.col(j) = a.v.col(start + j * stride);
  return Tensor(std::move(out));
}

Tensor hcat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("hcat of nothing");
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.rows() != parts[0].rows()) throw std::invalid_argument("hcat row mismatch");
    total += p.cols();
  }
  Array out(parts[0].rows(), total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.v;
    at += p.cols();
  }
  return Tensor(std::move(out));
}

Tensor matmul(const Tensor& x, const Tensor& w) {
  if (x.cols() != w.rows()) throw std::invalid_argument("matmul shape mismatch: " + shape(x.v) + " * " + shape(w.v));
  return Tensor(Array(x.v.matrix() * w.v.matrix()));
}

Tensor add_bias(const Tensor& x, const Tensor& b) {
  if (b.rows() != 1 || b.cols() != x.cols()) throw std::invalid_argument("bias shape mismatch");
  return Tensor(Array(x.v.rowwise() + b.v.row(0)));
}

Tensor sum_all(const Tensor& a) { return Tensor(Array::Constant(1, 1, a.v.sum())); }
Tensor mean_all(const Tensor& a) { return Tensor(Array::Constant(1, 1, a.v.mean())); }

// ---------------------------------------------------------------- Tape

Var Tape::leaf(Array v) {
  nodes_.push_back(Node{std::move(v), Array(), true, nullptr});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(Array v) {
  nodes_.push_back(Node{std::move(v), Array(), false, nullptr});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::push(Array v, bool rg, Backward bw) {
  nodes_.push_back(Node{std::move(v), Array(), rg, rg ? std::move(bw) : nullptr});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::backward(const Var& root) {
  if (root.tape != this) throw std::invalid_argument("backward: node belongs to another tape");
  const Array& rv = value(root.id);
  if (rv.rows() != 1 || rv.cols() != 1) throw std::invalid_argument("backward: root must be 1x1, got " + shape(rv));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  accumulate(root.id, Array::Ones(1, 1));
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

Array Tape::grad(const Var& v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.size() == 0) return zeros_like(n.value);
  return n.grad;
}

// ---------------------------------------------------------------- Var ops

namespace {

Tape& tape_of(const Var& a, const Var& b) {
  if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("operands on different tapes");
  return *a.tape;
}

template <class F>
Var unary(const Var& a, Array v, F backward_scale) {
  Tape& t = *a.tape;
  const bool rg = t.requires_grad(a.id);
  const int ia = a.id;
  return t.push(std::move(v), rg, [ia, backward_scale](Tape& tp, const Array& g) { tp.accumulate(ia, backward_scale(tp, g)); });
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(value(a), value(b), "+");
  const int ia = a.id, ib = b.id;
  return t.push(value(a) + value(b), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib](Tape& tp, const Array& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

Var operator-(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(value(a), value(b), "-");
  const int ia = a.id, ib = b.id;
  return t.push(value(a) - value(b), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib](Tape& tp, const Array& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, -g);
  });
}

Var operator*(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(value(a), value(b), "*");
  const int ia = a.id, ib = b.id;
  return t.push(value(a) * value(b), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib](Tape& tp, const Array& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g * tp.value(ia));
  });
}

Var operator/(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(value(a), value(b), "/");
  const int ia = a.id, ib = b.id;
  Array q = value(a) / value(b);
  const bool rg = t.requires_grad(ia) || t.requires_grad(ib);
  Array qc = rg ? q : Array();
  return t.push(std::move(q), rg, [ia, ib, qc = std::move(qc)](Tape& tp, const Array& g) {
    const Array gb = g / tp.value(ib);
    if (tp.requires_grad(ia)) tp.accumulate(ia, gb);
    if (tp.requires_grad(ib)) tp.accumulate(ib, -gb * qc);
  });
}

Var operator-(const Var& a) {
  return unary(a, -value(a), [](Tape&, const Array& g) { return Array(-g); });
}
Var operator+(const Var& a, double s) {
  return unary(a, value(a) + s, [](Tape&, const Array& g) { return g; });
}
Var operator+(double s, const Var& a) { return a + s; }
Var operator-(const Var& a, double s) { return a + (-s); }
Var operator-(double s, const Var& a) {
  return unary(a, s - value(a), [](Tape&, const Array& g) { return Array(-g); });
}
Var operator*(const Var& a, double s) {
  return unary(a, value(a) * s, [s](Tape&, const Array& g) { return Array(g * s); });
}
Var operator*(double s, const Var& a) { return a * s; }
Var operator/(const Var& a, double s) { return a * (1.0 / s); }
Var operator/(double s, const Var& a) {
  Array r = s / value(a);
  Array d = -r / value(a);
  return unary(a, std::move(r), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}

Var exp(const Var& a) {
  Array e = value(a).exp();
  Array d = e;
  return unary(a, std::move(e), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var log(const Var& a) {
  const int ia = a.id;
  return unary(a, value(a).log(), [ia](Tape& tp, const Array& g) { return Array(g / tp.value(ia)); });
}
Var sigmoid(const Var& a) {
  Array s = logistic_array(value(a));
  Array d = s * logistic_array(-value(a));
  return unary(a, std::move(s), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var softplus(const Var& a) {
  Array d = logistic_array(value(a));
  return unary(a, softplus_array(value(a)), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var tanh(const Var& a) {
  Array th = value(a).tanh();
  Array d = 1.0 - th.square();
  return unary(a, std::move(th), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var sin(const Var& a) {
  Array d = value(a).cos();
  return unary(a, value(a).sin(), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var cos(const Var& a) {
  Array d = -value(a).sin();
  return unary(a, value(a).cos(), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var swish(const Var& a) {
  const Array& x = value(a);
  Array s = logistic_array(x);
  Array d = s + x * s * logistic_array(-x);
  return unary(a, x * s, [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var square(const Var& a) {
  const int ia = a.id;
  return unary(a, value(a).square(), [ia](Tape& tp, const Array& g) { return Array(2.0 * g * tp.value(ia)); });
}
Var powr(const Var& a, double p) {
  Array d = p * ipow(value(a), p - 1.0);
  return unary(a, ipow(value(a), p), [d = std::move(d)](Tape&, const Array& g) { return Array(g * d); });
}
Var rampw(const Var& t, const RampW& r, int order) {
  const int it = t.id;
  return unary(t, rampw_eval(r, value(t), order),
               [it, r, order](Tape& tp, const Array& g) { return Array(g * rampw_eval(r, tp.value(it), order + 1)); });
}

Var where(const Mask& m, const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  check_same_shape(value(a), value(b), "where");
  const int ia = a.id, ib = b.id;
  return t.push(m.select(value(a), value(b)), t.requires_grad(ia) || t.requires_grad(ib), [ia, ib, m](Tape& tp, const Array& g) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, m.select(g, 0.0));
    if (tp.requires_grad(ib)) tp.accumulate(ib, m.select(0.0, g));
  });
}

Var repcols(const Var& a, Eigen::Index m) {
  if (value(a).cols() != 1) throw std::invalid_argument("repcols expects a column");
  return unary(a, value(a).replicate(1, m), [](Tape&, const Array& g) { return Array(g.rowwise().sum()); });
}

Var rowsum(const Var& a) {
  const Eigen::Index m = value(a).cols();
  return unary(a, value(a).rowwise().sum(), [m](Tape&, const Array& g) { return Array(g.replicate(1, m)); });
}

Var cols(const Var& a, Eigen::Index start, Eigen::Index count, Eigen::Index stride) {
  Tensor v = cols(Tensor(value(a)), start, count, stride);
  const Eigen::Index n = value(a).rows(), c = value(a).cols();
  return unary(a, std::move(v.v), [=](Tape&, const Array& g) {
    Array out = Array::Zero(n, c);
    for (Eigen::Index j = 0; j < count; ++j) out.col(start + j * stride) = g.col(j);
    return out;
  });
}

Var hcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("hcat of nothing");
  Tape& t = *parts[0].tape;
  std::vector<Tensor> vals;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.tape != &t) throw std::invalid_argument("hcat across tapes");
    vals.emplace_back(value(p));
    ids.push_back(p.id);
    widths.push_back(value(p).cols());
    rg = rg || t.requires_grad(p.id);
  }
  Tensor v = hcat(vals);
  return t.push(std::move(v.v), rg, [ids, widths](Tape& tp, const Array& g) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (tp.requires_grad(ids[i])) tp.accumulate(ids[i], g.middleCols(at, widths[i]));
      at += widths[i];
    }
  });
}

Var matmul(const Var& x, const Var& w) {
  Tape& t = tape_of(x, w);
  Tensor v = matmul(Tensor(value(x)), Tensor(value(w)));
  const int ix = x.id, iw = w.id;
  return t.push(std::move(v.v), t.requires_grad(ix) || t.requires_grad(iw), [ix, iw](Tape& tp, const Array& g) {
    if (tp.requires_grad(ix)) tp.accumulate(ix, Array(g.matrix() * tp.value(iw).matrix().transpose()));
    if (tp.requires_grad(iw)) tp.accumulate(iw, Array(tp.value(ix).matrix().transpose() * g.matrix()));
  });
}

Var add_bias(const Var& x, const Var& b) {
  Tape& t = tape_of(x, b);
  Tensor v = add_bias(Tensor(value(x)), Tensor(value(b)));
  const int ix = x.id, ib = b.id;
  return t.push(std::move(v.v), t.requires_grad(ix) || t.requires_grad(ib), [ix, ib](Tape& tp, const Array& g) {
    tp.accumulate(ix, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, Array(g.colwise().sum()));
  });
}

Var sum_all(const Var& a) {
  const Eigen::Index n = value(a).rows(), c = value(a).cols();
  return unary(a, Array::Constant(1, 1, value(a).sum()), [n, c](Tape&, const Array& g) { return Array(Array::Constant(n, c, g(0, 0))); });
}

Var mean_all(const Var& a) {
  const Eigen::Index n = value(a).rows(), c = value(a).cols();
  const double inv = 1.0 / static_cast<double>(n * c);
  return unary(a, Array::Constant(1, 1, value(a).mean()),
               [n, c, inv](Tape&, const Array& g) { return Array(Array::Constant(n, c, g(0, 0) * inv)); });
}

}  // namespace smoothflow::ad
