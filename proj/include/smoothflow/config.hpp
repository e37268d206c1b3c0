#pragma once

// Run configuration documents (JSON). Unknown keys are rejected everywhere.
//
// {
//   "schema_version": 1,
//   "seed": 0,
//   "output_dir": "runs/ring",
//   "potential": {"kind": "ring", ...},
//   "dataset":   {"chains": 1000, "burn": 100, "steps": 10, "proposal_std": 0.1},
//   "model":     {"layers": 4, "components": 40, "ramp": {...}, "hidden": [100, 100],
//                 "activation": "swish", "frequencies": 1, "direction": "forward", "init": "spread"},
//   "train":     {"omega_n": 1, "omega_k": 0, "omega_f": 0, "normalized": false, "lr": 5e-4, ...},
//   "rootfind":  {"bins": 16, "eps": 1e-10, "max_iter": 200, "x_tol": 0},
//   "md":        {"dt": 1e-3, "equil_steps": 1000, "prod_steps": 5000, ...}
// }

#include <cstdint>
#include <string>

#include "json.hpp"
#include "smoothflow/dataset.hpp"
#include "smoothflow/dynamics.hpp"
#include "smoothflow/flow.hpp"
#include "smoothflow/potentials.hpp"
#include "smoothflow/rootfind.hpp"
#include "smoothflow/training.hpp"

namespace smoothflow {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::string output_dir;
  ToyPotential potential;
  MHConfig dataset;
  ModelConfig model;
  TrainConfig train;
  RootFindConfig rootfind;
  MDConfig md;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
};

RootFindConfig rootfind_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace smoothflow
