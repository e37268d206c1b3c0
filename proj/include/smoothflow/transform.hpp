#pragma once

// Element-wise bijections of [0, 1] (interval or circle) built from bumps.
//
// A bump with concentration a and location b is the normalized sigmoid
// G(x) = s(a (x - b) + 1/2); a mixture is
//
//     y = (1 - c) * sum_i pi_i u_i(x) + c * x,
//
// so dy >= c everywhere. On the circle each bump is wrapped once around
// (a >= 1 keeps the support shorter than the circle).

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "smoothflow/forward_dual.hpp"
#include "smoothflow/ramp.hpp"

namespace smoothflow {

enum class Domain { Interval, Circle };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& name);

/// Lower bound on the identity weight c; keeps the slope away from zero.
inline constexpr double kCMin = 1e-3;
inline constexpr double kIntervalAMin = 0.1;
inline constexpr double kCircleAMin = 1.0;

inline double a_min(Domain d) { return d == Domain::Circle ? kCircleAMin : kIntervalAMin; }

// Maps from unconstrained storage to constrained parameters.
inline double a_from_raw(Domain d, double a_raw) { return a_min(d) + softplus(a_raw); }
inline double b_from_raw(Domain d, double b_raw) {
  return d == Domain::Circle ? b_raw - std::floor(b_raw) : logistic(b_raw);
}
inline double c_from_raw(double c_raw) { return kCMin + (1.0 - kCMin) * logistic(c_raw); }

double a_to_raw(Domain d, double a);
double b_to_raw(Domain d, double b);
double c_to_raw(double c);

/// Shape of one mixture transformer.
struct TransformerConfig {
  Domain domain = Domain::Interval;
  RampSpec ramp = RampSpec::exponential(1.0, 1.0);
  int components = 1;

  int params_per_component() const { return ramp.trainable_alpha() ? 3 : 2; }
  /// [a_raw, b_raw, (alpha_raw)] per component, then the logits, then c_raw.
  int num_params() const { return (params_per_component() + 1) * components + 1; }
  void validate() const;
};

struct BumpParams {
  double a = 1.0;
  double b = 0.5;
};

struct TransformJet {
  double y = 0, dy = 1, d2y = 0, d3y = 0;
  double g = 0, dg = 0, d2g = 0;

  static TransformJet from_derivatives(double y, double dy, double d2y, double d3y);
};

/// Derivatives of y, dy/dx and d2y/dx2 with respect to each unconstrained parameter.
struct ParamJacobian {
  Eigen::VectorXd dy;
  Eigen::VectorXd ddy;
  Eigen::VectorXd dd2y;
};

/// Strictly increasing scalar map with parameters.
class ScalarBijection {
 public:
  virtual ~ScalarBijection() = default;
  virtual TransformJet jet(double x) const = 0;
  virtual double value(double x) const { return jet(x).y; }
  virtual ParamJacobian param_jacobian(double x) const = 0;
  virtual std::size_t num_params() const = 0;
  virtual std::vector<double> params() const = 0;
  virtual void set_params(const std::vector<double>& p) = 0;
  virtual std::optional<double> analytic_inverse(double) const { return std::nullopt; }
};

class MixtureTransform final : public ScalarBijection {
 public:
  MixtureTransform(TransformerConfig cfg, std::vector<double> raw);

  /// c = 1 exactly: y = x.
  static MixtureTransform identity(const TransformerConfig& cfg);
  /// Evenly spaced bumps, equal weights, c = 1/2 (roughly c_min + (1 - c_min)/2).
  static MixtureTransform spread(const TransformerConfig& cfg);

  const TransformerConfig& config() const { return cfg_; }
  Domain domain() const { return cfg_.domain; }
  int components() const { return cfg_.components; }

  BumpParams bump(int i) const { return {a_[i], b_[i]}; }
  double alpha(int i) const { return alpha_[i]; }
  double weight(int i) const { return pi_[i]; }
  double c() const { return c_; }

  double value(double x) const override;
  TransformJet jet(double x) const override;
  ParamJacobian param_jacobian(double x) const override;
  std::size_t num_params() const override { return raw_.size(); }
  std::vector<double> params() const override { return raw_; }
  void set_params(const std::vector<double>& p) override;

  nlohmann::json to_json() const;
  static MixtureTransform from_json(const nlohmann::json& j);

 private:
  void refresh();

  TransformerConfig cfg_;
  std::vector<double> raw_;
  std::vector<double> a_, b_, alpha_, pi_, g0_, den_;
  double c_ = 1.0;
};

/// y = exp(log_scale) x + shift; parameters [log_scale, shift].
class AffineTransform final : public ScalarBijection {
 public:
  AffineTransform(double scale, double shift);
  double scale() const { return std::exp(log_scale_); }
  double shift() const { return shift_; }

  TransformJet jet(double x) const override;
  ParamJacobian param_jacobian(double x) const override;
  std::size_t num_params() const override { return 2; }
  std::vector<double> params() const override { return {log_scale_, shift_}; }
  void set_params(const std::vector<double>& p) override;
  std::optional<double> analytic_inverse(double y) const override { return (y - shift_) / scale(); }

 private:
  double log_scale_;
  double shift_;
};

/// Single normalized bump (no identity mix). Interval bumps satisfy u(0)=0, u(1)=1;
/// circle bumps are wrapped and have periodic derivatives.
TransformJet bump_forward(const BumpParams& p, const RampSpec& ramp, double x, Domain domain);
TransformJet mixture_forward(const MixtureTransform& t, double x);
TransformJet affine_forward(double scale, double shift, double x);
double affine_inverse(double scale, double shift, double y);
ParamJacobian transform_param_jacobian(const ScalarBijection& t, double x);

/// Value of the generalized sigmoid without derivatives (kappa = 1/alpha or k).
double sigmoid_value(const RampSpec& ramp, double kappa, double t);

nlohmann::json ramp_to_json(const RampSpec& r);
RampSpec ramp_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json transformer_to_json(const TransformerConfig& c);
TransformerConfig transformer_from_json(const nlohmann::json& j, const std::string& where);

/// Random unconstrained parameters spanning moderately sharp to broad bumps.
std::vector<double> random_raw_params(const TransformerConfig& cfg, std::mt19937_64& rng);

namespace detail {

/// u, u', u'', u''' of one normalized bump; S is double or a forward dual.
template <class S>
std::array<S, 4> bump_jet(Domain domain, const RampSpec& ramp, const S& a, const S& b, const S& alpha, double x) {
  std::array<S, 4> out{S(0.0), S(0.0), S(0.0), S(0.0)};
  const S half(0.5);
  if (domain == Domain::Interval) {
    const auto gx = sigmoid_jet<S>(ramp, alpha, a * (S(x) - b) + half);
    const S g0 = sigmoid_jet<S>(ramp, alpha, half - a * b).v;
    const S g1 = sigmoid_jet<S>(ramp, alpha, a * (S(1.0) - b) + half).v;
    const S den = g1 - g0;
    out[0] = (gx.v - g0) / den;
    out[1] = a * gx.d1 / den;
    out[2] = a * a * gx.d2 / den;
    out[3] = a * a * a * gx.d3 / den;
    return out;
  }
  for (int k = -1; k <= 1; ++k) {
    const auto gx = sigmoid_jet<S>(ramp, alpha, a * (S(x + k) - b) + half);
    const S gk = sigmoid_jet<S>(ramp, alpha, a * (S(static_cast<double>(k)) - b) + half).v;
    out[0] = out[0] + (gx.v - gk);
    out[1] = out[1] + a * gx.d1;
    out[2] = out[2] + a * a * gx.d2;
    out[3] = out[3] + a * a * a * gx.d3;
  }
  return out;
}

}  // namespace detail

}  // namespace smoothflow
