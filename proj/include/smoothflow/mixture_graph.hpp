#pragma once

// Mixture transformers evaluated row-wise on arrays of raw parameters, in any
// of the ad value types. Row i of R holds the unconstrained parameters of the
// transform applied to x(i); the column layout matches TransformerConfig.

#include <cmath>
#include <vector>

#include "smoothflow/ad.hpp"
#include "smoothflow/rootfind.hpp"
#include "smoothflow/transform.hpp"

namespace smoothflow {

/// Saturation threshold on |kappa w| beyond which s is taken as exactly 0 or 1.
inline constexpr double kSigmoidSaturation = 700.0;

template <class N>
struct SigmoidPair {
  N s;
  N ds;
};

/// s(t) and ds/dt elementwise; kappa has the shape of t.
template <class N>
SigmoidPair<N> sigmoid_graph(const ad::RampW& rw, const N& t, const N& kappa, bool need_ds) {
  using ad::Array;
  const Array& tv = ad::value(t);
  const Array& kv = ad::value(kappa);
  ad::Mask inside = (tv > 0.0) && (tv < 1.0);
  const Array tsafe_v = inside.select(tv, 0.5);
  const Array zv = kv * ad::rampw_eval(rw, tsafe_v, 0);
  const ad::Mask high = (tv >= 1.0) || (inside && zv >= kSigmoidSaturation);
  inside = inside && !(zv.abs() >= kSigmoidSaturation);  // NaN stays inside and propagates
  const N ts = ad::where(inside, t, ad::make_const(t, Array::Constant(tv.rows(), tv.cols(), 0.5)));
  const N z = kappa * rampw(ts, rw, 0);
  const N s = sigmoid(z);
  SigmoidPair<N> out{ad::where(inside, s, ad::make_const(t, high.cast<double>())), N{}};
  if (need_ds) {
    const N ds = s * sigmoid(-z) * kappa * rampw(ts, rw, 1);
    out.ds = ad::where(inside, ds, ad::make_const(t, Array::Zero(tv.rows(), tv.cols())));
  }
  return out;
}

template <class N>
struct MixtureOut {
  N y;
  N dy;
};

/// y = (1 - c) sum_i pi_i u_i(x) + c x and its x-derivative, row by row.
template <class N>
MixtureOut<N> mixture_graph(const TransformerConfig& cfg, const N& R, const N& x) {
  using ad::Array;
  const Eigen::Index m = cfg.components;
  const Eigen::Index s = cfg.params_per_component();
  const Eigen::Index n = ad::value(R).rows();
  if (ad::value(R).cols() != cfg.num_params()) throw std::invalid_argument("mixture: parameter columns do not match config");
  if (ad::value(x).rows() != n || ad::value(x).cols() != 1) throw std::invalid_argument("mixture: x must be a column matching R");
  const ad::RampW rw{cfg.ramp.kind, cfg.ramp.beta};
  const Domain dom = cfg.domain;

  const N a = softplus(ad::cols(R, 0, m, s)) + a_min(dom);
  const N b_raw = ad::cols(R, 1, m, s);
  const N b = dom == Domain::Circle ? N(b_raw - ad::make_const(R, ad::value(b_raw).floor())) : N(sigmoid(b_raw));
  const N kappa = cfg.ramp.kind == RampKind::Exponential ? N(exp(-ad::cols(R, 2, m, s)))
                                                          : ad::make_const(R, Array::Constant(n, m, cfg.ramp.order));
  const N logits = ad::cols(R, s * m, m);
  const Array lmax = ad::value(logits).rowwise().maxCoeff();
  const N e = exp(logits - ad::make_const(R, lmax.replicate(1, m)));
  const N pi = e / ad::repcols(ad::rowsum(e), m);
  const N c = sigmoid(ad::cols(R, (s + 1) * m, 1)) * (1.0 - kCMin) + kCMin;
  const N xm = ad::repcols(x, m);

  N u, du;
  if (dom == Domain::Interval) {
    const N tx = a * (xm - b) + 0.5;
    const auto gx = sigmoid_graph(rw, tx, kappa, true);
    const N g0 = sigmoid_graph(rw, N(0.5 - a * b), kappa, false).s;
    const N g1 = sigmoid_graph(rw, N(a * (1.0 - b) + 0.5), kappa, false).s;
    const N den = g1 - g0;
    u = (gx.s - g0) / den;
    du = a * gx.ds / den;
  } else {
    std::vector<N> tk, ck, kk;
    for (int k = -1; k <= 1; ++k) {
      tk.push_back(a * (xm + static_cast<double>(k) - b) + 0.5);
      ck.push_back(a * (static_cast<double>(k) - b) + 0.5);
      kk.push_back(kappa);
    }
    const N kap3 = ad::hcat(kk);
    const auto gx = sigmoid_graph(rw, ad::hcat(tk), kap3, true);
    const N gc = sigmoid_graph(rw, ad::hcat(ck), kap3, false).s;
    const N diff = gx.s - gc;
    u = ad::cols(diff, 0, m) + ad::cols(diff, m, m) + ad::cols(diff, 2 * m, m);
    du = a * (ad::cols(gx.ds, 0, m) + ad::cols(gx.ds, m, m) + ad::cols(gx.ds, 2 * m, m));
  }
  const N one_minus_c = 1.0 - c;
  return MixtureOut<N>{one_minus_c * ad::rowsum(pi * u) + c * x, one_minus_c * ad::rowsum(pi * du) + c};
}

/// Row-wise inverse of mixture_graph by multi-bin bisection (values only).
ad::Array mixture_invert_rows(const TransformerConfig& cfg, const ad::Array& R, const ad::Array& y, const RootFindConfig& rf);

/// Gradient of sum(seed * y(z; R)) with respect to R at fixed z.
ad::Array mixture_param_vjp(const TransformerConfig& cfg, const ad::Array& R, const ad::Array& z, const ad::Array& seed);

/// x-derivative of the mixture at z (values only).
ad::Array mixture_slope(const TransformerConfig& cfg, const ad::Array& R, const ad::Array& z);

/// z with mixture(z; R) = y, differentiable in R and y via the inverse function theorem.
ad::Tensor mixture_invert(const TransformerConfig& cfg, const ad::Tensor& R, const ad::Tensor& y, const RootFindConfig& rf);
ad::Var mixture_invert(const TransformerConfig& cfg, const ad::Var& R, const ad::Var& y, const RootFindConfig& rf);

template <class T>
ad::Dual<T> mixture_invert(const TransformerConfig& cfg, const ad::Dual<T>& R, const ad::Dual<T>& y, const RootFindConfig& rf) {
  const T z = mixture_invert(cfg, R.v, y.v, rf);
  // dz = (dy - dR . d alpha/dR) / alpha'(z): evaluate alpha at fixed z with R's tangents.
  const ad::Dual<T> zc{z, {}};
  const auto out = mixture_graph(cfg, R, zc);
  const T& slope = out.dy.v;
  ad::Dual<T> res{z, {}};
  const std::size_t nt = std::max(R.t.size(), y.t.size());
  res.t.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    std::optional<T> num;
    if (y.tangent(k)) num = *y.tangent(k);
    if (out.y.tangent(k)) num = num ? std::optional<T>(*num - *out.y.tangent(k)) : std::optional<T>(-*out.y.tangent(k));
    if (num) res.t[k] = *num / slope;
  }
  return res;
}

}  // namespace smoothflow
