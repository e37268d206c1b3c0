#include "smoothflow/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "smoothflow/errors.hpp"

namespace smoothflow {

ToyForceField::ToyForceField(ToyPotential p) : p_(std::move(p)) {
  p_.validate();
  p_.native_range(lo_, hi_);
}

void ToyForceField::eval(const Points& x, Eigen::ArrayXd& u, Points& force) const { p_.eval(x, u, force); }

Boundary ToyForceField::boundary(int) const {
  if (p_.kind == PotentialKind::Periodic) return Boundary::Wrap;
  if (p_.kind == PotentialKind::Flat) return Boundary::Reflect;
  return Boundary::Free;
}

double ToyForceField::lo(int d) const {
  if (p_.kind == PotentialKind::Flat) return -p_.box;
  return lo_[static_cast<std::size_t>(d)];
}
double ToyForceField::hi(int d) const {
  if (p_.kind == PotentialKind::Flat) return p_.box;
  return hi_[static_cast<std::size_t>(d)];
}

void FlowForceField::eval(const Points& x, Eigen::ArrayXd& u, Points& force) const {
  ForceResult r = flow_force(m_, x);
  u = -r.log_p;
  force = std::move(r.force);
}

Boundary FlowForceField::boundary(int d) const {
  return m_.domains[static_cast<std::size_t>(d)] == Domain::Circle ? Boundary::Wrap : Boundary::Reflect;
}

namespace {

void apply_boundaries(MDState& s, const ForceField& ff) {
  for (int d = 0; d < ff.dims(); ++d) {
    const Boundary b = ff.boundary(d);
    if (b == Boundary::Free) continue;
    const double lo = ff.lo(d), hi = ff.hi(d), w = hi - lo;
    for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
      double& x = s.x(i, d);
      if (b == Boundary::Wrap) {
        x = lo + (x - lo) - w * std::floor((x - lo) / w);
        if (x >= hi) x = lo;
      } else {
        // Specular reflection; repeat in case a step crosses both walls.
        for (int k = 0; k < 8 && (x < lo || x > hi); ++k) {
          x = x < lo ? 2 * lo - x : 2 * hi - x;
          s.v(i, d) = -s.v(i, d);
        }
        if (x < lo || x > hi) throw NumericError("md: position escaped the domain");
      }
    }
  }
}

void refresh_forces(MDState& s, const ForceField& ff) {
  ff.eval(s.x, s.u, s.f);
  if (!s.f.allFinite() || !s.u.allFinite()) throw NumericError("md: non-finite energy or force");
}

void half_kick(MDState& s) {
  for (Eigen::Index d = 0; d < s.x.cols(); ++d) s.v.col(d) += 0.5 * s.dt * s.f.col(d) / s.mass(d);
}

}  // namespace

MDState make_state(const ForceField& ff, Points x, Points v, const Eigen::ArrayXd& mass, double dt) {
  if (x.cols() != ff.dims() || v.rows() != x.rows() || v.cols() != x.cols() || mass.size() != x.cols())
    throw std::invalid_argument("md: state shapes do not match the force field");
  if ((mass <= 0).any() || !(dt > 0)) throw std::invalid_argument("md: masses and dt must be positive");
  MDState s;
  s.x = std::move(x);
  s.v = std::move(v);
  s.mass = mass;
  s.dt = dt;
  apply_boundaries(s, ff);
  refresh_forces(s, ff);
  return s;
}

void verlet_step(MDState& s, const ForceField& ff) {
  half_kick(s);
  s.x += s.dt * s.v;
  apply_boundaries(s, ff);
  refresh_forces(s, ff);
  half_kick(s);
  s.t += s.dt;
}

void langevin_step(MDState& s, const ForceField& ff, double friction, double temperature, std::mt19937_64& rng) {
  if (friction < 0 || temperature < 0) throw std::invalid_argument("langevin: friction and temperature must be >= 0");
  if (friction == 0 && temperature == 0) {
    verlet_step(s, ff);
    return;
  }
  half_kick(s);
  s.x += 0.5 * s.dt * s.v;
  apply_boundaries(s, ff);
  const double c1 = std::exp(-friction * s.dt);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < s.v.rows(); ++i)
    for (Eigen::Index d = 0; d < s.v.cols(); ++d) {
      const double c2 = std::sqrt((1.0 - c1 * c1) * temperature / s.mass(d));
      s.v(i, d) = c1 * s.v(i, d) + c2 * normal(rng);
    }
  s.x += 0.5 * s.dt * s.v;
  apply_boundaries(s, ff);
  refresh_forces(s, ff);
  half_kick(s);
  s.t += s.dt;
}

Eigen::ArrayXd kinetic_energy(const MDState& s) {
  Eigen::ArrayXd ke = Eigen::ArrayXd::Zero(s.v.rows());
  for (Eigen::Index d = 0; d < s.v.cols(); ++d) ke += 0.5 * s.mass(d) * s.v.col(d).square();
  return ke;
}

Points maxwell_boltzmann(int replicas, const Eigen::ArrayXd& mass, double temperature, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Points v(replicas, mass.size());
  for (int i = 0; i < replicas; ++i)
    for (Eigen::Index d = 0; d < mass.size(); ++d) v(i, d) = std::sqrt(temperature / mass(d)) * normal(rng);
  return v;
}

void MDConfig::validate() const {
  if (!(dt > 0)) throw ConfigError("md.dt must be > 0");
  if (equil_steps < 0 || prod_steps < 1) throw ConfigError("md: equil_steps >= 0 and prod_steps >= 1 required");
  if (friction < 0 || temperature < 0 || !(mass > 0)) throw ConfigError("md: friction, temperature >= 0 and mass > 0 required");
  if (replicas < 1 || record_every < 1) throw ConfigError("md: replicas and record_every must be >= 1");
  if (dt_sweep && (!(dt_target_std > 0) || dt_sweep_steps < 10 || dt_sweep_max_halvings < 0))
    throw ConfigError("md: invalid dt sweep settings");
}

double MDResult::max_std_per_dof() const {
  double m = 0;
  for (const auto& r : replicas) m = std::max(m, r.te_std_per_dof);
  return m;
}

double MDResult::max_abs_slope_per_dof() const {
  double m = 0;
  for (const auto& r : replicas) m = std::max(m, std::abs(r.te_slope_per_dof));
  return m;
}

void series_stats(const std::vector<double>& y, double& std_dev, double& slope, double& mean) {
  const auto n = static_cast<double>(y.size());
  mean = 0;
  for (double v : y) mean += v;
  mean /= n;
  double var = 0, sxy = 0, sxx = 0;
  const double tm = (n - 1) / 2.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    var += (y[i] - mean) * (y[i] - mean);
    sxy += (static_cast<double>(i) - tm) * (y[i] - mean);
    sxx += (static_cast<double>(i) - tm) * (static_cast<double>(i) - tm);
  }
  std_dev = y.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  slope = sxx > 0 ? sxy / sxx : 0.0;
}

namespace {

// Per-replica total-energy series over an NVE run of `steps` steps (including the start).
std::vector<std::vector<double>> nve_series(MDState& s, const ForceField& ff, int steps, std::ostream* csv, int record_every) {
  const Eigen::Index r = s.x.rows();
  std::vector<std::vector<double>> te(static_cast<std::size_t>(r));
  char buf[64];
  for (int step = 0; step <= steps; ++step) {
    if (step > 0) verlet_step(s, ff);
    const Eigen::ArrayXd ke = kinetic_energy(s);
    for (Eigen::Index i = 0; i < r; ++i) {
      te[static_cast<std::size_t>(i)].push_back(ke(i) + s.u(i));
      if (csv && step % record_every == 0) {
        *csv << i << ',' << step;
        std::snprintf(buf, sizeof buf, ",%.17g", step * s.dt);
        *csv << buf;
        for (Eigen::Index d = 0; d < s.x.cols(); ++d) {
          std::snprintf(buf, sizeof buf, ",%.17g", s.x(i, d));
          *csv << buf;
        }
        for (Eigen::Index d = 0; d < s.x.cols(); ++d) {
          std::snprintf(buf, sizeof buf, ",%.17g", s.v(i, d));
          *csv << buf;
        }
        for (double e : {ke(i), s.u(i), ke(i) + s.u(i)}) {
          std::snprintf(buf, sizeof buf, ",%.17g", e);
          *csv << buf;
        }
        *csv << '\n';
      }
    }
  }
  return te;
}

double max_std_per_dof(const std::vector<std::vector<double>>& te, int dofs) {
  double m = 0;
  for (const auto& series : te) {
    double sd, slope, mean;
    series_stats(series, sd, slope, mean);
    m = std::max(m, sd / dofs);
  }
  return m;
}

}  // namespace

MDResult run_md(const ForceField& ff, const Points& starts, const MDConfig& cfg, std::uint64_t seed, std::ostream* csv) {
  cfg.validate();
  if (starts.cols() != ff.dims() || starts.rows() < 1) throw std::invalid_argument("md: starting points do not match the force field");
  const int d = ff.dims();
  const Eigen::ArrayXd mass = Eigen::ArrayXd::Constant(d, cfg.mass);
  std::mt19937_64 rng(seed);
  const Points v0 = maxwell_boltzmann(static_cast<int>(starts.rows()), mass, cfg.temperature, rng);
  MDState s = make_state(ff, starts, v0, mass, cfg.dt);
  for (int k = 0; k < cfg.equil_steps; ++k) langevin_step(s, ff, cfg.friction, cfg.temperature, rng);

  MDResult res;
  res.dt = cfg.dt;
  if (cfg.dt_sweep) {
    // Probe NVE runs from the equilibrated state, halving dt until the error is
    // below target and shrinks roughly fourfold per halving (the dt^2 regime).
    double dt = cfg.dt;
    double prev = -1;
    for (int h = 0; h <= cfg.dt_sweep_max_halvings; ++h) {
      MDState probe = s;
      probe.dt = dt;
      double sd;
      try {
        sd = max_std_per_dof(nve_series(probe, ff, cfg.dt_sweep_steps, nullptr, 1), d);
      } catch (const NumericError&) {
        sd = INFINITY;
      }
      res.sweep.emplace_back(dt, sd);
      const bool asymptotic = prev > 0 && std::isfinite(prev) && prev / sd > 2.5;
      res.dt = dt;
      if (sd <= cfg.dt_target_std && (asymptotic || sd == 0)) break;
      prev = sd;
      dt *= 0.5;
    }
  }
  s.dt = res.dt;
  s.t = 0;
  if (csv) {
    *csv << "replica,step,t";
    for (int k = 1; k <= d; ++k) *csv << ",x" << k;
    for (int k = 1; k <= d; ++k) *csv << ",v" << k;
    *csv << ",ke,pe,te\n";
  }
  const auto te = nve_series(s, ff, cfg.prod_steps, csv, cfg.record_every);
  for (const auto& series : te) {
    ReplicaStats st;
    double sd, slope, mean;
    series_stats(series, sd, slope, mean);
    st.te_std_per_dof = sd / d;
    st.te_slope_per_dof = slope / d;
    st.te_mean = mean;
    res.replicas.push_back(st);
  }
  return res;
}

}  // namespace smoothflow
