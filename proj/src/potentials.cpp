#include "smoothflow/potentials.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "smoothflow/errors.hpp"
#include "smoothflow/json_util.hpp"

namespace smoothflow {

namespace {
constexpr std::size_t kMaxRadialTerms = 16;
}

std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::Ring:
      return "ring";
    case PotentialKind::Periodic:
      return "periodic";
    case PotentialKind::Flat:
      return "flat";
    case PotentialKind::Harmonic:
      return "harmonic";
  }
  return "?";
}

PotentialKind potential_kind_from_string(const std::string& s) {
  if (s == "ring") return PotentialKind::Ring;
  if (s == "periodic") return PotentialKind::Periodic;
  if (s == "flat") return PotentialKind::Flat;
  if (s == "harmonic") return PotentialKind::Harmonic;
  throw ConfigError("unknown potential kind '" + s + "' (expected ring|periodic|flat|harmonic)");
}

ToyPotential ToyPotential::ring() { return ToyPotential{}; }

ToyPotential ToyPotential::periodic() {
  ToyPotential p;
  p.kind = PotentialKind::Periodic;
  p.sigma = 0.05;
  p.radii = {0.5, 1.0, 1.5, 2.0};
  return p;
}

ToyPotential ToyPotential::flat(int dims, double box) {
  ToyPotential p;
  p.kind = PotentialKind::Flat;
  p.dims = dims;
  p.box = box;
  return p;
}

ToyPotential ToyPotential::harmonic(int dims, double stiffness) {
  ToyPotential p;
  p.kind = PotentialKind::Harmonic;
  p.dims = dims;
  p.stiffness = stiffness;
  return p;
}

void ToyPotential::validate() const {
  if (dims < 1) throw ConfigError("potential.dims must be >= 1");
  if (kind == PotentialKind::Ring || kind == PotentialKind::Periodic) {
    if (dims != 2) throw ConfigError("potential: ring and periodic energies are two-dimensional");
    if (!(sigma > 0)) throw ConfigError("potential.sigma must be > 0");
    if (alphas.empty() || alphas.size() != radii.size()) throw ConfigError("potential: alphas and radii must be nonempty and of equal length");
    if (alphas.size() > kMaxRadialTerms) throw ConfigError("potential: at most 16 radial terms");
    for (double a : alphas)
      if (!(a > 0)) throw ConfigError("potential.alphas must be positive");
    for (std::size_t i = 1; i < radii.size(); ++i)
      if (!(radii[i] > radii[i - 1])) throw ConfigError("potential.radii must be increasing");
    if (!(radii[0] >= 0)) throw ConfigError("potential.radii must be nonnegative");
  }
  if (kind == PotentialKind::Flat && !(box > 0)) throw ConfigError("potential.box must be > 0");
  if (kind == PotentialKind::Harmonic && !(stiffness > 0)) throw ConfigError("potential.stiffness must be > 0");
}

namespace {

// -log sum_i alpha_i exp(-(s - r_i)^2 / (2 sigma)) and its s-derivative.
void radial_mixture(const ToyPotential& p, double s, double& u, double& du) {
  double m = -INFINITY;
  const std::size_t n = p.alphas.size();
  double lw[kMaxRadialTerms];
  for (std::size_t i = 0; i < n; ++i) {
    const double d = s - p.radii[i];
    lw[i] = std::log(p.alphas[i]) - d * d / (2.0 * p.sigma);
    m = std::max(m, lw[i]);
  }
  double z = 0, zd = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(lw[i] - m);
    z += w;
    zd += w * (s - p.radii[i]) / p.sigma;
  }
  u = -(m + std::log(z));
  du = zd / z;
}

}  // namespace

double ToyPotential::energy(const double* x) const {
  switch (kind) {
    case PotentialKind::Flat:
      return 0.0;
    case PotentialKind::Harmonic: {
      double r2 = 0;
      for (int i = 0; i < dims; ++i) r2 += x[i] * x[i];
      return 0.5 * stiffness * r2;
    }
    case PotentialKind::Ring: {
      double u, du;
      radial_mixture(*this, std::hypot(x[0], x[1]), u, du);
      return u;
    }
    case PotentialKind::Periodic: {
      const double b = std::sqrt(std::max(0.0, std::cos(x[0] * x[0]) + std::cos(x[1] * x[1]) + 2.0));
      double u, du;
      radial_mixture(*this, b, u, du);
      return u;
    }
  }
  return 0.0;
}

bool ToyPotential::inside(const double* x) const {
  if (kind != PotentialKind::Flat) return true;
  for (int i = 0; i < dims; ++i)
    if (x[i] < -box || x[i] > box) return false;
  return true;
}

void ToyPotential::eval(const Eigen::ArrayXXd& x, Eigen::ArrayXd& u, Eigen::ArrayXXd& force) const {
  if (x.cols() != dims) throw std::invalid_argument("potential: expected " + std::to_string(dims) + " columns");
  const Eigen::Index n = x.rows();
  u.resize(n);
  force.setZero(n, dims);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (kind) {
      case PotentialKind::Flat:
        u(i) = 0.0;
        break;
      case PotentialKind::Harmonic: {
        double r2 = 0;
        for (int c = 0; c < dims; ++c) {
          r2 += x(i, c) * x(i, c);
          force(i, c) = -stiffness * x(i, c);
        }
        u(i) = 0.5 * stiffness * r2;
        break;
      }
      case PotentialKind::Ring: {
        const double r = std::hypot(x(i, 0), x(i, 1));
        double du;
        radial_mixture(*this, r, u(i), du);
        // The energy has a cone point at the origin; its force is left at zero.
        if (r > 0) {
          force(i, 0) = -du * x(i, 0) / r;
          force(i, 1) = -du * x(i, 1) / r;
        }
        break;
      }
      case PotentialKind::Periodic: {
        const double q0 = x(i, 0) * x(i, 0), q1 = x(i, 1) * x(i, 1);
        const double b = std::sqrt(std::max(0.0, std::cos(q0) + std::cos(q1) + 2.0));
        double du;
        radial_mixture(*this, b, u(i), du);
        if (b > 1e-12) {
          force(i, 0) = du * x(i, 0) * std::sin(q0) / b;
          force(i, 1) = du * x(i, 1) * std::sin(q1) / b;
        }
        break;
      }
    }
  }
}

std::vector<Domain> ToyPotential::domains() const {
  return std::vector<Domain>(static_cast<std::size_t>(dims), kind == PotentialKind::Periodic ? Domain::Circle : Domain::Interval);
}

void ToyPotential::native_range(std::vector<double>& lo, std::vector<double>& hi) const {
  double l = 1.0;
  switch (kind) {
    case PotentialKind::Ring:
      l = radii.back() + 4.0 * std::sqrt(sigma);
      break;
    case PotentialKind::Periodic:
      l = std::numbers::pi;
      break;
    case PotentialKind::Flat:
      l = box;
      break;
    case PotentialKind::Harmonic:
      l = 5.0 / std::sqrt(stiffness);
      break;
  }
  lo.assign(static_cast<std::size_t>(dims), -l);
  hi.assign(static_cast<std::size_t>(dims), l);
}

nlohmann::json ToyPotential::to_json() const {
  nlohmann::json j{{"kind", to_string(kind)}, {"dims", dims}};
  if (kind == PotentialKind::Ring || kind == PotentialKind::Periodic) {
    j["sigma"] = sigma;
    j["alphas"] = alphas;
    j["radii"] = radii;
  }
  if (kind == PotentialKind::Flat) j["box"] = box;
  if (kind == PotentialKind::Harmonic) j["stiffness"] = stiffness;
  return j;
}

ToyPotential ToyPotential::from_json(const nlohmann::json& j, const std::string& where) {
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j, {"kind", "dims", "sigma", "alphas", "radii", "box", "stiffness"}, where);
  const PotentialKind kind = potential_kind_from_string(jsonu::get_required<std::string>(j, "kind", where));
  ToyPotential p = kind == PotentialKind::Periodic ? periodic() : ring();
  p.kind = kind;
  p.dims = jsonu::get_or<int>(j, "dims", 2, where);
  p.sigma = jsonu::get_or<double>(j, "sigma", p.sigma, where);
  p.alphas = jsonu::get_or<std::vector<double>>(j, "alphas", p.alphas, where);
  p.radii = jsonu::get_or<std::vector<double>>(j, "radii", p.radii, where);
  p.box = jsonu::get_or<double>(j, "box", p.box, where);
  p.stiffness = jsonu::get_or<double>(j, "stiffness", p.stiffness, where);
  p.validate();
  return p;
}

}  // namespace smoothflow
