#include "smoothflow/transform.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "smoothflow/json_util.hpp"

namespace smoothflow {

using nlohmann::json;

std::string to_string(Domain d) { return d == Domain::Circle ? "circle" : "interval"; }

Domain domain_from_string(const std::string& name) {
  if (name == "interval") return Domain::Interval;
  if (name == "circle") return Domain::Circle;
  throw ConfigError("unknown domain '" + name + "' (expected interval or circle)");
}

double a_to_raw(Domain d, double a) {
  const double excess = a - a_min(d);
  if (!(excess > 0)) throw std::invalid_argument("concentration below the domain minimum");
  return excess > 30 ? excess : std::log(std::expm1(excess));
}

double b_to_raw(Domain d, double b) {
  if (d == Domain::Circle) return b - std::floor(b);
  if (!(b > 0 && b < 1)) throw std::invalid_argument("interval location must lie in (0, 1)");
  return std::log(b / (1.0 - b));
}

double c_to_raw(double c) {
  if (!(c > kCMin && c <= 1.0)) throw std::invalid_argument("identity weight must lie in (c_min, 1]");
  if (c == 1.0) return 50.0;
  const double s = (c - kCMin) / (1.0 - kCMin);
  return std::log(s / (1.0 - s));
}

void TransformerConfig::validate() const {
  ramp.validate();
  if (components < 1) throw std::invalid_argument("a mixture needs at least one component");
}

TransformJet TransformJet::from_derivatives(double y, double dy, double d2y, double d3y) {
  TransformJet j;
  j.y = y;
  j.dy = dy;
  j.d2y = d2y;
  j.d3y = d3y;
  j.g = std::log(dy);
  j.dg = d2y / dy;
  j.d2g = d3y / dy - j.dg * j.dg;
  return j;
}

double sigmoid_value(const RampSpec& ramp, double kappa, double t) {
  if (!(t > 0.0)) return 0.0;
  if (!(t < 1.0)) return 1.0;
  double w;
  if (ramp.kind == RampKind::Exponential) {
    const double p = -ramp.beta;
    if (ramp.beta == 1.0)
      w = 1.0 / (1.0 - t) - 1.0 / t;
    else if (ramp.beta == 2.0)
      w = 1.0 / ((1.0 - t) * (1.0 - t)) - 1.0 / (t * t);
    else
      w = std::pow(1.0 - t, p) - std::pow(t, p);
  } else {
    w = std::log(t) - std::log1p(-t);
  }
  return logistic(kappa * w);
}

// ---------------------------------------------------------------- mixture

MixtureTransform::MixtureTransform(TransformerConfig cfg, std::vector<double> raw) : cfg_(std::move(cfg)), raw_(std::move(raw)) {
  cfg_.validate();
  if (static_cast<int>(raw_.size()) != cfg_.num_params())
    throw std::invalid_argument("mixture expects " + std::to_string(cfg_.num_params()) + " parameters, got " +
                                std::to_string(raw_.size()));
  refresh();
}

MixtureTransform MixtureTransform::identity(const TransformerConfig& cfg) {
  MixtureTransform t = spread(cfg);
  t.raw_.back() = 50.0;
  t.refresh();
  return t;
}

MixtureTransform MixtureTransform::spread(const TransformerConfig& cfg) {
  cfg.validate();
  const int m = cfg.components;
  const int s = cfg.params_per_component();
  std::vector<double> raw(static_cast<std::size_t>(cfg.num_params()), 0.0);
  const double a = std::max(a_min(cfg.domain) + 0.5, m / 4.0);
  for (int i = 0; i < m; ++i) {
    raw[static_cast<std::size_t>(s * i)] = a_to_raw(cfg.domain, a);
    raw[static_cast<std::size_t>(s * i + 1)] = b_to_raw(cfg.domain, (i + 0.5) / m);
    if (s == 3) raw[static_cast<std::size_t>(s * i + 2)] = std::log(cfg.ramp.alpha);
  }
  return MixtureTransform(cfg, std::move(raw));
}

void MixtureTransform::set_params(const std::vector<double>& p) {
  if (p.size() != raw_.size()) throw std::invalid_argument("parameter count mismatch");
  raw_ = p;
  refresh();
}

void MixtureTransform::refresh() {
  const int m = cfg_.components;
  const int s = cfg_.params_per_component();
  const Domain d = cfg_.domain;
  a_.assign(m, 0);
  b_.assign(m, 0);
  alpha_.assign(m, cfg_.ramp.alpha);
  pi_.assign(m, 0);
  g0_.assign(m, 0);
  den_.assign(m, 1);
  double lmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) lmax = std::max(lmax, raw_[static_cast<std::size_t>(s * m + i)]);
  double z = 0;
  for (int i = 0; i < m; ++i) {
    a_[i] = a_from_raw(d, raw_[static_cast<std::size_t>(s * i)]);
    b_[i] = b_from_raw(d, raw_[static_cast<std::size_t>(s * i + 1)]);
    if (s == 3) alpha_[i] = std::exp(raw_[static_cast<std::size_t>(s * i + 2)]);
    pi_[i] = std::exp(raw_[static_cast<std::size_t>(s * m + i)] - lmax);
    z += pi_[i];
  }
  for (double& p : pi_) p /= z;
  c_ = c_from_raw(raw_.back());
  for (int i = 0; i < m; ++i) {
    const double kappa = cfg_.ramp.kind == RampKind::Exponential ? 1.0 / alpha_[i] : cfg_.ramp.order;
    if (d == Domain::Interval) {
      const double g0 = sigmoid_value(cfg_.ramp, kappa, 0.5 - a_[i] * b_[i]);
      const double g1 = sigmoid_value(cfg_.ramp, kappa, a_[i] * (1.0 - b_[i]) + 0.5);
      g0_[i] = g0;
      den_[i] = g1 - g0;
    } else {
      double acc = 0;
      for (int k = -1; k <= 1; ++k) acc += sigmoid_value(cfg_.ramp, kappa, a_[i] * (k - b_[i]) + 0.5);
      g0_[i] = acc;
    }
  }
}

double MixtureTransform::value(double x) const {
  if (c_ == 1.0) return x;
  double acc = 0;
  for (int i = 0; i < cfg_.components; ++i) {
    const double kappa = cfg_.ramp.kind == RampKind::Exponential ? 1.0 / alpha_[i] : cfg_.ramp.order;
    double u;
    if (cfg_.domain == Domain::Interval) {
      u = (sigmoid_value(cfg_.ramp, kappa, a_[i] * (x - b_[i]) + 0.5) - g0_[i]) / den_[i];
    } else {
      double g = 0;
      for (int k = -1; k <= 1; ++k) g += sigmoid_value(cfg_.ramp, kappa, a_[i] * (x + k - b_[i]) + 0.5);
      u = g - g0_[i];
    }
    acc += pi_[i] * u;
  }
  return (1.0 - c_) * acc + c_ * x;
}

TransformJet MixtureTransform::jet(double x) const {
  double u = 0, du = 0, d2u = 0, d3u = 0;
  for (int i = 0; i < cfg_.components; ++i) {
    const auto j = detail::bump_jet<double>(cfg_.domain, cfg_.ramp, a_[i], b_[i], alpha_[i], x);
    u += pi_[i] * j[0];
    du += pi_[i] * j[1];
    d2u += pi_[i] * j[2];
    d3u += pi_[i] * j[3];
  }
  const double w = 1.0 - c_;
  return TransformJet::from_derivatives(w * u + c_ * x, w * du + c_, w * d2u, w * d3u);
}

ParamJacobian MixtureTransform::param_jacobian(double x) const {
  using F = Fwd<3>;
  const int m = cfg_.components;
  const int s = cfg_.params_per_component();
  const Domain d = cfg_.domain;
  const std::size_t np = raw_.size();
  ParamJacobian pj{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(np)), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(np)),
                   Eigen::VectorXd::Zero(static_cast<Eigen::Index>(np))};
  const double w = 1.0 - c_;
  std::vector<std::array<double, 3>> uj(static_cast<std::size_t>(m));
  double ubar = 0, dubar = 0, d2ubar = 0;
  for (int i = 0; i < m; ++i) {
    const F ar = F::variable(raw_[static_cast<std::size_t>(s * i)], 0);
    const F br = F::variable(raw_[static_cast<std::size_t>(s * i + 1)], 1);
    const F a = a_min(d) + softplus(ar);
    const F b = d == Domain::Circle ? br - std::floor(br.v) : logistic(br);
    const F alpha = s == 3 ? exp(F::variable(raw_[static_cast<std::size_t>(s * i + 2)], 2)) : F(cfg_.ramp.alpha);
    const auto j = detail::bump_jet<F>(d, cfg_.ramp, a, b, alpha, x);
    for (int k = 0; k < s; ++k) {
      const auto idx = static_cast<Eigen::Index>(s * i + k);
      pj.dy(idx) = w * pi_[i] * j[0].d[k];
      pj.ddy(idx) = w * pi_[i] * j[1].d[k];
      pj.dd2y(idx) = w * pi_[i] * j[2].d[k];
    }
    uj[static_cast<std::size_t>(i)] = {j[0].v, j[1].v, j[2].v};
    ubar += pi_[i] * j[0].v;
    dubar += pi_[i] * j[1].v;
    d2ubar += pi_[i] * j[2].v;
  }
  for (int i = 0; i < m; ++i) {
    const auto idx = static_cast<Eigen::Index>(s * m + i);
    const auto& u = uj[static_cast<std::size_t>(i)];
    pj.dy(idx) = w * pi_[i] * (u[0] - ubar);
    pj.ddy(idx) = w * pi_[i] * (u[1] - dubar);
    pj.dd2y(idx) = w * pi_[i] * (u[2] - d2ubar);
  }
  const double sc = logistic(raw_.back());
  const double dc = (1.0 - kCMin) * sc * (1.0 - sc);
  const auto last = static_cast<Eigen::Index>(np - 1);
  pj.dy(last) = dc * (x - ubar);
  pj.ddy(last) = dc * (1.0 - dubar);
  pj.dd2y(last) = -dc * d2ubar;
  return pj;
}

json MixtureTransform::to_json() const {
  const int m = cfg_.components;
  const int s = cfg_.params_per_component();
  json comps = json::array();
  for (int i = 0; i < m; ++i) {
    json c = {{"a_raw", raw_[static_cast<std::size_t>(s * i)]}, {"b_raw", raw_[static_cast<std::size_t>(s * i + 1)]}};
    if (s == 3) c["alpha_raw"] = raw_[static_cast<std::size_t>(s * i + 2)];
    comps.push_back(c);
  }
  json logits = json::array();
  for (int i = 0; i < m; ++i) logits.push_back(raw_[static_cast<std::size_t>(s * m + i)]);
  return {{"domain", to_string(cfg_.domain)},
          {"ramp", ramp_to_json(cfg_.ramp)},
          {"components", comps},
          {"weight_logits", logits},
          {"c_raw", jsonu::finite_or_clamped(raw_.back())}};
}

MixtureTransform MixtureTransform::from_json(const json& j) {
  const std::string where = "mixture";
  jsonu::reject_unknown(j, {"domain", "ramp", "components", "weight_logits", "c_raw"}, where);
  TransformerConfig cfg;
  cfg.domain = domain_from_string(jsonu::get_required<std::string>(j, "domain", where));
  cfg.ramp = ramp_from_json(j.at("ramp"), where + ".ramp");
  const json& comps = j.at("components");
  const json& logits = j.at("weight_logits");
  if (!comps.is_array() || !logits.is_array() || comps.size() != logits.size() || comps.empty())
    throw ConfigError(where + ": components and weight_logits must be equally long non-empty arrays");
  cfg.components = static_cast<int>(comps.size());
  std::vector<double> raw;
  for (const auto& c : comps) {
    if (cfg.ramp.trainable_alpha())
      jsonu::reject_unknown(c, {"a_raw", "b_raw", "alpha_raw"}, where + ".components[]");
    else
      jsonu::reject_unknown(c, {"a_raw", "b_raw"}, where + ".components[]");
    raw.push_back(jsonu::get_required<double>(c, "a_raw", where));
    raw.push_back(jsonu::get_required<double>(c, "b_raw", where));
    if (cfg.ramp.trainable_alpha()) raw.push_back(jsonu::get_or<double>(c, "alpha_raw", std::log(cfg.ramp.alpha), where));
  }
  for (const auto& l : logits) raw.push_back(l.get<double>());
  raw.push_back(jsonu::get_required<double>(j, "c_raw", where));
  return MixtureTransform(cfg, std::move(raw));
}

// ---------------------------------------------------------------- affine

AffineTransform::AffineTransform(double scale, double shift) : shift_(shift) {
  if (!(scale > 0)) throw std::invalid_argument("affine scale must be positive");
  log_scale_ = std::log(scale);
}

TransformJet AffineTransform::jet(double x) const {
  const double s = scale();
  return TransformJet::from_derivatives(s * x + shift_, s, 0.0, 0.0);
}

ParamJacobian AffineTransform::param_jacobian(double x) const {
  const double s = scale();
  ParamJacobian pj{Eigen::VectorXd(2), Eigen::VectorXd(2), Eigen::VectorXd::Zero(2)};
  pj.dy << s * x, 1.0;
  pj.ddy << s, 0.0;
  return pj;
}

void AffineTransform::set_params(const std::vector<double>& p) {
  if (p.size() != 2) throw std::invalid_argument("affine transform has two parameters");
  log_scale_ = p[0];
  shift_ = p[1];
}

// ---------------------------------------------------------------- free functions

TransformJet bump_forward(const BumpParams& p, const RampSpec& ramp, double x, Domain domain) {
  ramp.validate();
  const auto j = detail::bump_jet<double>(domain, ramp, p.a, p.b, ramp.alpha, x);
  return TransformJet::from_derivatives(j[0], j[1], j[2], j[3]);
}

TransformJet mixture_forward(const MixtureTransform& t, double x) { return t.jet(x); }

TransformJet affine_forward(double scale, double shift, double x) { return AffineTransform(scale, shift).jet(x); }

double affine_inverse(double scale, double shift, double y) { return *AffineTransform(scale, shift).analytic_inverse(y); }

ParamJacobian transform_param_jacobian(const ScalarBijection& t, double x) { return t.param_jacobian(x); }

json ramp_to_json(const RampSpec& r) {
  if (r.kind == RampKind::Monomial) return {{"kind", "monomial"}, {"order", r.order}};
  return {{"kind", "exponential"}, {"alpha", r.alpha}, {"beta", r.beta}};
}

RampSpec ramp_from_json(const json& j, const std::string& where) {
  jsonu::require_object(j, where);
  const auto kind = jsonu::get_required<std::string>(j, "kind", where);
  try {
    if (kind == "monomial") {
      jsonu::reject_unknown(j, {"kind", "order"}, where);
      return RampSpec::monomial(jsonu::get_required<int>(j, "order", where));
    }
    if (kind == "exponential") {
      jsonu::reject_unknown(j, {"kind", "alpha", "beta"}, where);
      return RampSpec::exponential(jsonu::get_or<double>(j, "alpha", 1.0, where), jsonu::get_or<double>(j, "beta", 1.0, where));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown ramp kind '" + kind + "'");
}

json transformer_to_json(const TransformerConfig& c) {
  return {{"domain", to_string(c.domain)}, {"ramp", ramp_to_json(c.ramp)}, {"components", c.components}};
}

TransformerConfig transformer_from_json(const json& j, const std::string& where) {
  jsonu::reject_unknown(j, {"domain", "ramp", "components"}, where);
  TransformerConfig c;
  c.domain = domain_from_string(jsonu::get_required<std::string>(j, "domain", where));
  c.ramp = ramp_from_json(j.at("ramp"), where + ".ramp");
  c.components = jsonu::get_required<int>(j, "components", where);
  if (c.components < 1) throw ConfigError(where + ".components must be >= 1");
  return c;
}

std::vector<double> random_raw_params(const TransformerConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ua(-2.0, 3.0), ub(-3.0, 3.0), ul(-1.0, 1.0), uc(-3.0, 3.0);
  std::normal_distribution<double> nl(0.0, 1.0);
  const int m = cfg.components;
  const int s = cfg.params_per_component();
  std::vector<double> raw(static_cast<std::size_t>(cfg.num_params()));
  for (int i = 0; i < m; ++i) {
    raw[static_cast<std::size_t>(s * i)] = ua(rng);
    raw[static_cast<std::size_t>(s * i + 1)] = ub(rng);
    if (s == 3) raw[static_cast<std::size_t>(s * i + 2)] = ul(rng);
  }
  for (int i = 0; i < m; ++i) raw[static_cast<std::size_t>(s * m + i)] = nl(rng);
  raw.back() = uc(rng);
  return raw;
}

}  // namespace smoothflow
