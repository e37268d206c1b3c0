#pragma once

// Sample sets for training: Metropolis-Hastings generation, the affine map
// from native coordinates into the unit cube, and CSV + JSON file formats.

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "smoothflow/potentials.hpp"

namespace smoothflow {

/// Per dimension: unit = unit_lo + scale * (native - native_lo) with
/// scale = (unit_hi - unit_lo) / (native_hi - native_lo). Circle dimensions
/// use the full unit range and wrap.
struct Compactification {
  std::vector<Domain> domains;
  std::vector<double> native_lo, native_hi;
  std::vector<double> unit_lo, unit_hi;

  static Compactification for_potential(const ToyPotential& p);

  int dims() const { return static_cast<int>(domains.size()); }
  double scale(int d) const;
  double to_unit(int d, double native) const;
  double to_native(int d, double unit) const;
  /// Forces transform covariantly: d/d(unit) = (1 / scale) d/d(native).
  double force_to_unit(int d, double f_native) const { return f_native / scale(d); }
  double force_to_native(int d, double f_unit) const { return f_unit * scale(d); }
  /// sum_d log scale(d): log p_unit = log p_native - log_scale_sum().
  double log_scale_sum() const;

  nlohmann::json to_json() const;
  static Compactification from_json(const nlohmann::json& j, const std::string& where);
};

/// Margin kept free at each end of an Interval dimension.
inline constexpr double kUnitMargin = 0.05;

struct MHConfig {
  int chains = 1000;
  int burn = 100;
  int steps = 10;  // recorded steps per chain after burn-in, one sample each
  double proposal_std = 0.1;

  void validate() const;
};

struct Dataset {
  Eigen::ArrayXXd x;  // unit coordinates
  Eigen::ArrayXXd f;  // forces in unit coordinates
  Compactification comp;
  nlohmann::json meta;  // full metadata document

  int dims() const { return static_cast<int>(x.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
};

struct MHResult {
  Eigen::ArrayXXd x;  // native coordinates, chain-major within each recorded step
  Eigen::ArrayXXd f;
  double acceptance = 0;
};

/// Chains start on a regular grid over the potential's native range.
MHResult mh_sample(const ToyPotential& p, const MHConfig& cfg, std::uint64_t seed);

/// Maps MH output into the unit cube; points outside it are dropped and counted in meta.
Dataset make_dataset(const ToyPotential& p, const MHConfig& cfg, std::uint64_t seed);

/// `path` receives the CSV, `path + ".meta.json"` the metadata.
void write_dataset(const Dataset& d, const std::string& path);
Dataset read_dataset(const std::string& path);

std::string meta_path(const std::string& csv_path);

}  // namespace smoothflow
