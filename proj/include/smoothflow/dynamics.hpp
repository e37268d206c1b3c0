#pragma once

// Velocity Verlet and BAOAB Langevin integration for a batch of independent
// replicas, driven by a toy energy or by a flow's -log p_f.

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "smoothflow/flow.hpp"
#include "smoothflow/potentials.hpp"

namespace smoothflow {

/// How positions are kept inside the domain of a force field.
enum class Boundary { Free, Reflect, Wrap };

class ForceField {
 public:
  virtual ~ForceField() = default;
  virtual int dims() const = 0;
  /// Rows are replicas.
  virtual void eval(const Points& x, Eigen::ArrayXd& u, Points& force) const = 0;
  virtual Boundary boundary(int dim) const = 0;
  virtual double lo(int dim) const { return 0.0; }
  virtual double hi(int dim) const { return 1.0; }
};

/// Toy energy in native coordinates (periodic potentials wrap on [-pi, pi)).
class ToyForceField final : public ForceField {
 public:
  explicit ToyForceField(ToyPotential p);
  int dims() const override { return p_.dims; }
  void eval(const Points& x, Eigen::ArrayXd& u, Points& force) const override;
  Boundary boundary(int dim) const override;
  double lo(int dim) const override;
  double hi(int dim) const override;

 private:
  ToyPotential p_;
  std::vector<double> lo_, hi_;
};

/// u = -log p_f on the unit cube; Interval dims reflect, Circle dims wrap.
class FlowForceField final : public ForceField {
 public:
  explicit FlowForceField(const FlowModel& m) : m_(m) {}
  int dims() const override { return m_.dims; }
  void eval(const Points& x, Eigen::ArrayXd& u, Points& force) const override;
  Boundary boundary(int dim) const override;

 private:
  const FlowModel& m_;
};

struct MDState {
  Points x, v;   // replicas x dims
  Points f;      // forces at x
  Eigen::ArrayXd u;
  Eigen::ArrayXd mass;  // per dimension
  double dt = 1e-3;
  double t = 0;
};

MDState make_state(const ForceField& ff, Points x, Points v, const Eigen::ArrayXd& mass, double dt);

void verlet_step(MDState& s, const ForceField& ff);
/// BAOAB; friction == 0 and temperature == 0 falls through to verlet_step exactly.
void langevin_step(MDState& s, const ForceField& ff, double friction, double temperature, std::mt19937_64& rng);

Eigen::ArrayXd kinetic_energy(const MDState& s);

/// Velocities from the Maxwell-Boltzmann distribution at temperature kT.
Points maxwell_boltzmann(int replicas, const Eigen::ArrayXd& mass, double temperature, std::mt19937_64& rng);

struct MDConfig {
  double dt = 1e-3;
  int equil_steps = 1000;
  int prod_steps = 5000;
  double friction = 1.0;
  double temperature = 1.0;
  double mass = 1.0;
  int replicas = 10;
  int record_every = 1;
  /// Halve dt from `dt` until short NVE probes show the dt^2 error regime and
  /// a per-DOF energy std below dt_target_std.
  bool dt_sweep = false;
  double dt_target_std = 2.5e-4;
  int dt_sweep_steps = 1000;
  int dt_sweep_max_halvings = 12;

  void validate() const;
};

struct ReplicaStats {
  double te_std_per_dof = 0;
  double te_slope_per_dof = 0;  // least-squares slope per step
  double te_mean = 0;
};

struct MDResult {
  double dt = 0;
  std::vector<ReplicaStats> replicas;
  std::vector<std::pair<double, double>> sweep;  // (dt, max per-DOF std)
  double max_std_per_dof() const;
  double max_abs_slope_per_dof() const;
};

/// Langevin equilibration followed by NVE production from `starts` (replicas x dims).
/// Production rows go to `csv` as replica,step,t,x...,v...,ke,pe,te.
MDResult run_md(const ForceField& ff, const Points& starts, const MDConfig& cfg, std::uint64_t seed, std::ostream* csv);

/// Standard deviation and least-squares slope of a series.
void series_stats(const std::vector<double>& y, double& std_dev, double& slope, double& mean);

}  // namespace smoothflow
