#pragma once

// Array-level differentiation engine.
//
// Three value types share one operation vocabulary so that flow code can be
// written once as a template:
//   Tensor   plain (batch x features) arrays, no derivatives
//   Var      node on a reverse-mode Tape
//   Dual<T>  forward-mode tangent channels over T in {Tensor, Var}
// Dual<Var> gives gradients of expressions that contain first derivatives
// (forces), which is what the force-matching loss needs.

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothflow/ramp.hpp"

namespace smoothflow::ad {

using Array = Eigen::ArrayXXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// The generalized sigmoid is logistic(kappa * w(t)) on (0, 1), with
///   exponential ramp: w = (1-t)^-beta - t^-beta, kappa = 1/alpha
///   monomial ramp:    w = log t - log(1-t),       kappa = k
struct RampW {
  RampKind kind = RampKind::Exponential;
  double beta = 1.0;
};

/// n-th derivative of w at each entry of t (entries must lie in (0, 1)).
Array rampw_eval(const RampW& r, const Array& t, int order);

void check_same_shape(const Array& a, const Array& b, const char* op);

// ---------------------------------------------------------------- Tensor

struct Tensor {
  Array v;
  Tensor() = default;
  Tensor(Array a) : v(std::move(a)) {}  // NOLINT(google-explicit-constructor)
  template <class D>
  Tensor(const Eigen::ArrayBase<D>& e) : v(e) {}  // NOLINT(google-explicit-constructor)
  Eigen::Index rows() const { return v.rows(); }
  Eigen::Index cols() const { return v.cols(); }
};

inline const Array& value(const Tensor& x) { return x.v; }
inline Tensor make_const(const Tensor&, Array a) { return Tensor(std::move(a)); }

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  check_same_shape(a.v, b.v, "+");
  return Tensor(a.v + b.v);
}
inline Tensor operator-(const Tensor& a, const Tensor& b) {
  check_same_shape(a.v, b.v, "-");
  return Tensor(a.v - b.v);
}
inline Tensor operator*(const Tensor& a, const Tensor& b) {
  check_same_shape(a.v, b.v, "*");
  return Tensor(a.v * b.v);
}
inline Tensor operator/(const Tensor& a, const Tensor& b) {
  check_same_shape(a.v, b.v, "/");
  return Tensor(a.v / b.v);
}
inline Tensor operator-(const Tensor& a) { return Tensor(-a.v); }
inline Tensor operator+(const Tensor& a, double s) { return Tensor(a.v + s); }
inline Tensor operator+(double s, const Tensor& a) { return Tensor(a.v + s); }
inline Tensor operator-(const Tensor& a, double s) { return Tensor(a.v - s); }
inline Tensor operator-(double s, const Tensor& a) { return Tensor(s - a.v); }
inline Tensor operator*(const Tensor& a, double s) { return Tensor(a.v * s); }
inline Tensor operator*(double s, const Tensor& a) { return Tensor(a.v * s); }
inline Tensor operator/(const Tensor& a, double s) { return Tensor(a.v / s); }
inline Tensor operator/(double s, const Tensor& a) { return Tensor(s / a.v); }

inline Array logistic_array(const Array& x) { return 1.0 / (1.0 + (-x).exp()); }
inline Array softplus_array(const Array& x) { return x.max(0.0) + (-x.abs()).exp().log1p(); }

inline Tensor exp(const Tensor& a) { return Tensor(a.v.exp()); }
inline Tensor log(const Tensor& a) { return Tensor(a.v.log()); }
inline Tensor sigmoid(const Tensor& a) { return Tensor(logistic_array(a.v)); }
inline Tensor softplus(const Tensor& a) { return Tensor(softplus_array(a.v)); }
inline Tensor tanh(const Tensor& a) { return Tensor(a.v.tanh()); }
inline Tensor sin(const Tensor& a) { return Tensor(a.v.sin()); }
inline Tensor cos(const Tensor& a) { return Tensor(a.v.cos()); }
inline Tensor swish(const Tensor& a) { return Tensor(a.v * logistic_array(a.v)); }
inline Tensor square(const Tensor& a) { return Tensor(a.v.square()); }
inline Tensor powr(const Tensor& a, double p) { return Tensor(a.v.pow(p)); }
inline Tensor rampw(const Tensor& t, const RampW& r, int order) { return Tensor(rampw_eval(r, t.v, order)); }

Tensor where(const Mask& m, const Tensor& a, const Tensor& b);
Tensor repcols(const Tensor& a, Eigen::Index m);
Tensor rowsum(const Tensor& a);
Tensor cols(const Tensor& a, Eigen::Index start, Eigen::Index count, Eigen::Index stride = 1);
Tensor hcat(const std::vector<Tensor>& parts);
Tensor matmul(const Tensor& x, const Tensor& w);
Tensor add_bias(const Tensor& x, const Tensor& b);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// ---------------------------------------------------------------- Tape / Var

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Array& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable input; gradients are collected for it.
  Var leaf(Array v);
  Var constant(Array v);
  /// Records an operation. `bw` is dropped when `requires_grad` is false.
  Var push(Array v, bool requires_grad, Backward bw);

  const Array& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  template <class E>
  void accumulate(int id, const E& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  /// Reverse sweep from a 1x1 node.
  void backward(const Var& root);
  /// Gradient of the last backward() root with respect to v (zeros if none reached it).
  Array grad(const Var& v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Array value;
    Array grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

inline const Array& value(const Var& x) { return x.tape->value(x.id); }
inline Var make_const(const Var& like, Array a) { return like.tape->constant(std::move(a)); }
inline bool requires_grad(const Var& x) { return x.tape->requires_grad(x.id); }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator+(const Var& a, double s);
Var operator+(double s, const Var& a);
Var operator-(const Var& a, double s);
Var operator-(double s, const Var& a);
Var operator*(const Var& a, double s);
Var operator*(double s, const Var& a);
Var operator/(const Var& a, double s);
Var operator/(double s, const Var& a);

Var exp(const Var& a);
Var log(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var tanh(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var swish(const Var& a);
Var square(const Var& a);
Var powr(const Var& a, double p);
Var rampw(const Var& t, const RampW& r, int order);

Var where(const Mask& m, const Var& a, const Var& b);
Var repcols(const Var& a, Eigen::Index m);
Var rowsum(const Var& a);
Var cols(const Var& a, Eigen::Index start, Eigen::Index count, Eigen::Index stride = 1);
Var hcat(const std::vector<Var>& parts);
Var matmul(const Var& x, const Var& w);
Var add_bias(const Var& x, const Var& b);
Var sum_all(const Var& a);
Var mean_all(const Var& a);

// ---------------------------------------------------------------- Dual

/// Value plus tangent channels; an empty optional is an exact zero tangent.
template <class T>
struct Dual {
  T v;
  std::vector<std::optional<T>> t;

  const std::optional<T>& tangent(std::size_t k) const {
    static const std::optional<T> none;
    return k < t.size() ? t[k] : none;
  }
};

template <class N>
struct base_type {
  using type = N;
};
template <class T>
struct base_type<Dual<T>> {
  using type = T;
};
/// Type of network weights when activations are N (weights carry no tangents).
template <class N>
using base_t = typename base_type<N>::type;

template <class N>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

template <class T>
const Array& value(const Dual<T>& x) {
  return value(x.v);
}
template <class T>
Dual<T> make_const(const Dual<T>& like, Array a) {
  return Dual<T>{make_const(like.v, std::move(a)), {}};
}

namespace detail {

template <class T>
std::optional<T> tadd(std::optional<T> a, const std::optional<T>& b) {
  if (!a) return b;
  if (!b) return a;
  return *a + *b;
}

template <class T, class F>
std::vector<std::optional<T>> tmap(const std::vector<std::optional<T>>& t, F f) {
  std::vector<std::optional<T>> out(t.size());
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k]) out[k] = f(*t[k]);
  return out;
}

template <class T, class FA, class FB>
std::vector<std::optional<T>> tzip(const Dual<T>& a, const Dual<T>& b, FA fa, FB fb) {
  const std::size_t n = std::max(a.t.size(), b.t.size());
  std::vector<std::optional<T>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::optional<T> x, y;
    if (a.tangent(k)) x = fa(*a.tangent(k));
    if (b.tangent(k)) y = fb(*b.tangent(k));
    out[k] = tadd(std::move(x), y);
  }
  return out;
}

// Unary op with derivative d (already evaluated at the value).
template <class T>
Dual<T> chain(T v, const Dual<T>& a, const T& d) {
  return Dual<T>{std::move(v), tmap(a.t, [&](const T& x) { return d * x; })};
}

}  // namespace detail

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return Dual<T>{a.v + b.v, detail::tzip(a, b, [](const T& x) { return x; }, [](const T& x) { return x; })};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return Dual<T>{a.v - b.v, detail::tzip(a, b, [](const T& x) { return x; }, [](const T& x) { return -x; })};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return Dual<T>{a.v * b.v,
                 detail::tzip(a, b, [&](const T& x) { return x * b.v; }, [&](const T& x) { return a.v * x; })};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T r = a.v / b.v;
  if (b.t.empty()) return Dual<T>{r, detail::tmap(a.t, [&](const T& x) { return x / b.v; })};
  const T neg_q = -(r / b.v);
  return Dual<T>{r, detail::tzip(a, b, [&](const T& x) { return x / b.v; }, [&](const T& x) { return neg_q * x; })};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return Dual<T>{-a.v, detail::tmap(a.t, [](const T& x) { return -x; })};
}
template <class T>
Dual<T> operator+(const Dual<T>& a, double s) {
  return Dual<T>{a.v + s, a.t};
}
template <class T>
Dual<T> operator+(double s, const Dual<T>& a) {
  return Dual<T>{a.v + s, a.t};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, double s) {
  return Dual<T>{a.v - s, a.t};
}
template <class T>
Dual<T> operator-(double s, const Dual<T>& a) {
  return Dual<T>{s - a.v, detail::tmap(a.t, [](const T& x) { return -x; })};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, double s) {
  return Dual<T>{a.v * s, detail::tmap(a.t, [&](const T& x) { return x * s; })};
}
template <class T>
Dual<T> operator*(double s, const Dual<T>& a) {
  return a * s;
}
template <class T>
Dual<T> operator/(const Dual<T>& a, double s) {
  return a * (1.0 / s);
}
template <class T>
Dual<T> operator/(double s, const Dual<T>& a) {
  T r = s / a.v;
  return detail::chain(r, a, T(-(r / a.v)));
}

template <class T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return detail::chain(e, a, e);
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  return detail::chain(log(a.v), a, T(1.0 / a.v));
}
template <class T>
Dual<T> sigmoid(const Dual<T>& a) {
  T s = sigmoid(a.v);
  return detail::chain(s, a, T(s * sigmoid(-a.v)));
}
template <class T>
Dual<T> softplus(const Dual<T>& a) {
  return detail::chain(softplus(a.v), a, sigmoid(a.v));
}
template <class T>
Dual<T> tanh(const Dual<T>& a) {
  T th = tanh(a.v);
  return detail::chain(th, a, T(1.0 - square(th)));
}
template <class T>
Dual<T> sin(const Dual<T>& a) {
  return detail::chain(sin(a.v), a, cos(a.v));
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  return detail::chain(cos(a.v), a, T(-sin(a.v)));
}
template <class T>
Dual<T> swish(const Dual<T>& a) {
  T s = sigmoid(a.v);
  T d = s + a.v * s * sigmoid(-a.v);
  return detail::chain(a.v * s, a, d);
}
template <class T>
Dual<T> square(const Dual<T>& a) {
  return detail::chain(square(a.v), a, T(2.0 * a.v));
}
template <class T>
Dual<T> powr(const Dual<T>& a, double p) {
  return detail::chain(powr(a.v, p), a, T(p * powr(a.v, p - 1.0)));
}
template <class T>
Dual<T> rampw(const Dual<T>& t, const RampW& r, int order) {
  if (t.t.empty()) return Dual<T>{rampw(t.v, r, order), {}};
  return detail::chain(rampw(t.v, r, order), t, rampw(t.v, r, order + 1));
}

template <class T>
Dual<T> where(const Mask& m, const Dual<T>& a, const Dual<T>& b) {
  Dual<T> r{where(m, a.v, b.v), {}};
  const std::size_t n = std::max(a.t.size(), b.t.size());
  r.t.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& ta = a.tangent(k);
    const auto& tb = b.tangent(k);
    if (!ta && !tb) continue;
    const T za = ta ? *ta : make_const(a.v, Array::Zero(m.rows(), m.cols()));
    const T zb = tb ? *tb : make_const(a.v, Array::Zero(m.rows(), m.cols()));
    r.t[k] = where(m, za, zb);
  }
  return r;
}
template <class T>
Dual<T> repcols(const Dual<T>& a, Eigen::Index m) {
  return Dual<T>{repcols(a.v, m), detail::tmap(a.t, [&](const T& x) { return repcols(x, m); })};
}
template <class T>
Dual<T> rowsum(const Dual<T>& a) {
  return Dual<T>{rowsum(a.v), detail::tmap(a.t, [](const T& x) { return rowsum(x); })};
}
template <class T>
Dual<T> cols(const Dual<T>& a, Eigen::Index start, Eigen::Index count, Eigen::Index stride = 1) {
  return Dual<T>{cols(a.v, start, count, stride),
                 detail::tmap(a.t, [&](const T& x) { return cols(x, start, count, stride); })};
}
template <class T>
Dual<T> hcat(const std::vector<Dual<T>>& parts) {
  std::vector<T> vals;
  std::size_t n = 0;
  for (const auto& p : parts) {
    vals.push_back(p.v);
    n = std::max(n, p.t.size());
  }
  Dual<T> r{hcat(vals), std::vector<std::optional<T>>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    bool any = false;
    for (const auto& p : parts) any = any || p.tangent(k).has_value();
    if (!any) continue;
    std::vector<T> tk;
    for (const auto& p : parts)
      tk.push_back(p.tangent(k) ? *p.tangent(k) : make_const(p.v, Array::Zero(value(p.v).rows(), value(p.v).cols())));
    r.t[k] = hcat(tk);
  }
  return r;
}
template <class T>
Dual<T> matmul(const Dual<T>& x, const T& w) {
  return Dual<T>{matmul(x.v, w), detail::tmap(x.t, [&](const T& t) { return matmul(t, w); })};
}
template <class T>
Dual<T> add_bias(const Dual<T>& x, const T& b) {
  return Dual<T>{add_bias(x.v, b), x.t};
}
template <class T>
Dual<T> sum_all(const Dual<T>& a) {
  return Dual<T>{sum_all(a.v), detail::tmap(a.t, [](const T& x) { return sum_all(x); })};
}
template <class T>
Dual<T> mean_all(const Dual<T>& a) {
  return Dual<T>{mean_all(a.v), detail::tmap(a.t, [](const T& x) { return mean_all(x); })};
}

/// Seeds tangent channel `slot` of `nslots` with ones.
template <class T>
Dual<T> seed(const T& v, std::size_t slot, std::size_t nslots) {
  Dual<T> d{v, std::vector<std::optional<T>>(nslots)};
  d.t[slot] = make_const(v, Array::Ones(value(v).rows(), value(v).cols()));
  return d;
}

/// Tangent k as an array (zeros when the channel is empty).
template <class T>
Array tangent_value(const Dual<T>& d, std::size_t k) {
  if (d.tangent(k)) return value(*d.tangent(k));
  return Array::Zero(value(d.v).rows(), value(d.v).cols());
}

}  // namespace smoothflow::ad
