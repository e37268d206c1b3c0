#pragma once

// Analytic toy energies in their native coordinates.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "json.hpp"
#include "smoothflow/transform.hpp"

namespace smoothflow {

enum class PotentialKind { Ring, Periodic, Flat, Harmonic };

std::string to_string(PotentialKind k);
PotentialKind potential_kind_from_string(const std::string& s);

/// Ring:     u = -log sum_i alpha_i exp(-(|x| - r_i)^2 / (2 sigma))
/// Periodic: same with |x| replaced by b(x) = (cos x1^2 + cos x2^2 + 2)^(1/2), x in [-pi, pi)^2
/// Flat:     u = 0 on [-box, box]^d (proposals leaving the box are rejected)
/// Harmonic: u = stiffness |x|^2 / 2
struct ToyPotential {
  PotentialKind kind = PotentialKind::Ring;
  int dims = 2;
  double sigma = 0.06;
  std::vector<double> alphas = {1.0, 0.8, 0.6, 0.4};
  std::vector<double> radii = {1.0, 2.0, 3.0, 4.0};
  double box = 1.0;
  double stiffness = 1.0;

  static ToyPotential ring();
  static ToyPotential periodic();
  static ToyPotential flat(int dims, double box = 1.0);
  static ToyPotential harmonic(int dims, double stiffness = 1.0);

  void validate() const;

  /// Energies and forces (-du/dx) for a row batch in native coordinates.
  void eval(const Eigen::ArrayXXd& x, Eigen::ArrayXd& u, Eigen::ArrayXXd& force) const;
  double energy(const double* x) const;

  /// False where the energy is infinite (outside the flat box).
  bool inside(const double* x) const;

  /// Coordinate domain of each dimension in native units.
  std::vector<Domain> domains() const;
  /// Native range [lo, hi] used for grid starts and compactification.
  void native_range(std::vector<double>& lo, std::vector<double>& hi) const;

  nlohmann::json to_json() const;
  static ToyPotential from_json(const nlohmann::json& j, const std::string& where);
};

}  // namespace smoothflow
