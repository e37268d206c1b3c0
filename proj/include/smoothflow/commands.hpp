#pragma once

// File-to-file operations behind the command-line tool. Each returns a short
// human-readable summary; machine-readable results go to the named files.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smoothflow {

std::string cmd_gen_data(const std::string& config_path, const std::string& out_csv, std::optional<std::uint64_t> seed);

/// Writes model.json, best.json, metrics.csv, validation.csv and summary.json into out_dir.
std::string cmd_train(const std::string& config_path, const std::string& data_csv, const std::string& out_dir,
                      std::optional<std::uint64_t> seed);

/// Metrics JSON goes to out_json; when out_json is empty it is returned instead of a summary.
std::string cmd_eval(const std::string& model_path, const std::string& data_csv, const std::string& out_json, int kld_samples,
                     std::optional<std::uint64_t> seed);

/// Flow potential when model_path is set, otherwise the config's toy potential.
std::string cmd_mdsim(const std::string& config_path, const std::string& model_path, const std::string& data_csv,
                      const std::string& out_csv, std::optional<std::uint64_t> seed);

std::string cmd_bench_rootfind(const std::vector<int>& dims, const std::vector<int>& bins, int batch, int reps, double eps,
                               std::uint64_t seed, bool timing, const std::string& out_csv);

/// Exactly one of model_path / config_path must be set.
std::string cmd_export_grid(const std::string& model_path, const std::string& config_path, int resolution, const std::string& out_csv);

}  // namespace smoothflow
