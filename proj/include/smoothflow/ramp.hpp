#pragma once

/// \file
/// Ramp functions and the generalized sigmoid built from them.
///
/// A ramp rho is zero for x <= 0 and strictly increasing on (0, 1]. Two
/// families are provided: the monomial x^k and the exponential ramp
/// exp(-1 / (alpha * x^beta)), which is C-infinity with every derivative
/// vanishing at 0. The generalized sigmoid is
///
///     s(x) = rho(x) / (rho(x) + rho(1 - x)),
///
/// a diffeomorphism of [0, 1] whose derivatives up to the smoothness order of
/// rho vanish at both ends.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "smoothflow/forward_dual.hpp"

namespace smoothflow {

enum class RampKind { Monomial, Exponential };

struct RampSpec {
  RampKind kind = RampKind::Exponential;
  int order = 1;       // monomial only
  double alpha = 1.0;  // exponential only; initial value when trained
  double beta = 1.0;   // exponential only; fixed hyperparameter

  static RampSpec monomial(int k) {
    RampSpec s;
    s.kind = RampKind::Monomial;
    s.order = k;
    s.validate();
    return s;
  }
  static RampSpec exponential(double alpha, double beta) {
    RampSpec s;
    s.kind = RampKind::Exponential;
    s.alpha = alpha;
    s.beta = beta;
    s.validate();
    return s;
  }

  /// Throws std::invalid_argument for k < 1, alpha <= 0 or beta < 1.
  void validate() const;

  bool trainable_alpha() const { return kind == RampKind::Exponential; }

  /// Smoothness class of the ramp's zero extension at 0; -1 means C-infinity.
  /// x^k extended by zero is C^(k-1).
  int smoothness() const { return kind == RampKind::Exponential ? -1 : order - 1; }
};

template <class S>
struct Jet4 {
  S v{}, d1{}, d2{}, d3{};
};

using RampJet = Jet4<double>;
using SigmoidJet = Jet4<double>;

/// exp(-1/(alpha x^beta)) is flushed to exact zero (with all derivatives)
/// once its exponent passes this value.
inline constexpr double kRampUnderflowExponent = 700.0;

namespace detail {

// log rho and the ratios q_n = rho^(n) / rho at x > 0.
template <class S>
struct RampLogJet {
  S log_rho{}, q1{}, q2{}, q3{};
};

template <class S>
RampLogJet<S> ramp_log_jet(const RampSpec& spec, const S& alpha, const S& x) {
  using std::log;
  using std::pow;
  RampLogJet<S> r;
  if (spec.kind == RampKind::Monomial) {
    const double k = spec.order;
    r.log_rho = k * log(x);
    const S inv = S(1.0) / x;
    r.q1 = k * inv;
    r.q2 = (k * (k - 1.0)) * inv * inv;
    r.q3 = (k * (k - 1.0) * (k - 2.0)) * inv * inv * inv;
    return r;
  }
  const double beta = spec.beta;
  const S xb = spec.beta == 1.0 ? x : (spec.beta == 2.0 ? x * x : pow(x, beta));
  const S h = S(1.0) / (alpha * xb);
  const S inv = S(1.0) / x;
  r.log_rho = -h;
  const S q1 = beta * h * inv;
  const S dq1 = (-beta * (beta + 1.0)) * h * inv * inv;
  const S ddq1 = (beta * (beta + 1.0) * (beta + 2.0)) * h * inv * inv * inv;
  const S q2 = dq1 + q1 * q1;
  const S dq2 = ddq1 + 2.0 * q1 * dq1;
  r.q1 = q1;
  r.q2 = q2;
  r.q3 = dq2 + q2 * q1;
  return r;
}

}  // namespace detail

/// Value and first three derivatives of the ramp at x, with the ramp's
/// alpha taken from the argument (so that it can carry derivatives).
template <class S>
Jet4<S> ramp_jet(const RampSpec& spec, const S& alpha, const S& x) {
  using std::exp;
  Jet4<S> out{S(0.0), S(0.0), S(0.0), S(0.0)};
  if (!(value_of(x) > 0.0)) return out;
  const auto lj = detail::ramp_log_jet(spec, alpha, x);
  if (!(value_of(lj.log_rho) > -kRampUnderflowExponent)) return out;
  const S rho = exp(lj.log_rho);
  out.v = rho;
  out.d1 = lj.q1 * rho;
  out.d2 = lj.q2 * rho;
  out.d3 = lj.q3 * rho;
  return out;
}

/// Generalized sigmoid jet. With L = log rho(x) - log rho(1 - x), s is
/// logistic(L) and its derivatives are s(1 - s) times polynomials in the
/// derivatives of L. s(1 - s) is formed as u w / (u + w)^2 from the ramps
/// rescaled by the larger of the two, so the tails keep relative accuracy.
template <class S>
Jet4<S> sigmoid_jet(const RampSpec& spec, const S& alpha, const S& x) {
  using std::exp;
  Jet4<S> out{S(0.0), S(0.0), S(0.0), S(0.0)};
  const double xv = value_of(x);
  if (!(xv > 0.0)) return out;
  if (!(xv < 1.0)) {
    out.v = S(1.0);
    return out;
  }
  const S y = S(1.0) - x;
  const auto a = detail::ramp_log_jet(spec, alpha, x);
  const auto b = detail::ramp_log_jet(spec, alpha, y);
  S u(0.0), w(0.0);
  const S m = value_of(a.log_rho) >= value_of(b.log_rho) ? a.log_rho : b.log_rho;
  if (value_of(a.log_rho) - value_of(m) > -kRampUnderflowExponent) u = exp(a.log_rho - m);
  if (value_of(b.log_rho) - value_of(m) > -kRampUnderflowExponent) w = exp(b.log_rho - m);
  const S den = u + w;
  const S s = u / den;
  const S ss = u * w / (den * den);  // s (1 - s)
  const S c = (w - u) / den;         // 1 - 2 s
  const S l1 = a.q1 + b.q1;
  const S l2 = (a.q2 - a.q1 * a.q1) - (b.q2 - b.q1 * b.q1);
  const S l3 = (a.q3 - 3.0 * a.q1 * a.q2 + 2.0 * a.q1 * a.q1 * a.q1) + (b.q3 - 3.0 * b.q1 * b.q2 + 2.0 * b.q1 * b.q1 * b.q1);
  out.v = s;
  out.d1 = ss * l1;
  out.d2 = ss * (l2 + c * l1 * l1);
  out.d3 = ss * (l3 + 3.0 * c * l1 * l2 + (1.0 - 6.0 * ss) * l1 * l1 * l1);
  return out;
}

RampJet ramp_eval(const RampSpec& spec, double x);
SigmoidJet sigmoid_eval(const RampSpec& spec, double x);

std::string to_string(RampKind kind);
RampKind ramp_kind_from_string(const std::string& name);

}  // namespace smoothflow
