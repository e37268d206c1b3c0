// smoothflow command-line tool. Thin layer over the C API.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "smoothflow/smoothflow.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code(sf_status s) {
  switch (s) {
    case SF_OK:
      return kExitOk;
    case SF_ERR_INVALID_ARGUMENT:
    case SF_ERR_CONFIG:
    case SF_ERR_IO:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

// Runs one C API call, prints its summary or error, and returns the exit code.
template <class F>
int run(const char* name, F&& call) {
  sf_string* summary = nullptr;
  const sf_status s = call(&summary);
  if (s != SF_OK) {
    std::fprintf(stderr, "smoothflow %s: %s: %s\n", name, sf_status_name(s), sf_last_error());
    return exit_code(s);
  }
  std::printf("%s\n", sf_string_data(summary));
  sf_string_free(summary);
  return kExitOk;
}

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

const uint64_t* seed_ptr(const std::optional<std::uint64_t>& s) { return s ? &*s : nullptr; }

const char* kFooter =
    "Config files are JSON with schema_version 1 (required) and optional sections\n"
    "seed, output_dir, potential, dataset, model, train, rootfind, md. Unknown keys\n"
    "are rejected. Model checkpoints carry version 1; datasets carry a\n"
    "<csv>.meta.json sidecar with format smoothflow-dataset, version 1.\n"
    "Exit codes: 0 ok, 2 usage/config/io error, 3 runtime error.";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smooth normalizing flows on intervals and circles"};
  app.footer(kFooter);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sf_version()));

  std::optional<std::uint64_t> seed;
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "Random seed (overrides the config seed)"); };

  std::string config, out, data, model;
  bool use_potential = false;

  auto* gen = app.add_subcommand("gen-data", "Sample a toy potential with Metropolis-Hastings");
  gen->add_option("--config", config, "Run config JSON")->required();
  gen->add_option("--out", out, "Dataset CSV (metadata goes to <out>.meta.json)")->required();
  add_seed(gen);

  auto* train = app.add_subcommand("train", "Train a flow on a dataset");
  train->add_option("--config", config, "Run config JSON")->required();
  train->add_option("--data", data, "Dataset CSV")->required();
  train->add_option("--out", out, "Output directory")->required();
  add_seed(train);

  int kld_samples = 10000;
  auto* eval = app.add_subcommand("eval", "Evaluate NLL, FME, KLD and sampling efficiency");
  eval->add_option("--model", model, "Model checkpoint JSON")->required();
  eval->add_option("--data", data, "Dataset CSV")->required();
  eval->add_option("--out", out, "Metrics JSON (printed to stdout when omitted)");
  eval->add_option("--kld-samples", kld_samples, "Flow samples for KLD and efficiency")->capture_default_str();
  add_seed(eval);

  auto* md = app.add_subcommand("mdsim", "Molecular dynamics on a flow or toy potential");
  md->add_option("--md-config,--config", config, "Run config JSON (md and potential sections)")->required();
  auto* md_model = md->add_option("--model", model, "Simulate -log p of this checkpoint");
  auto* md_pot = md->add_flag("--potential", use_potential, "Simulate the config's toy potential");
  md_model->excludes(md_pot);
  md->add_option("--data", data, "Dataset CSV with start configurations");
  md->add_option("--out", out, "Trajectory CSV")->required();
  add_seed(md);

  std::vector<int> dims{1, 2, 4}, bins{2, 4, 16, 64};
  int batch = 1000, reps = 5;
  double eps = 1e-10;
  bool no_timing = false;
  auto* bench = app.add_subcommand("bench-rootfind", "Root-finding iteration counts and runtimes");
  bench->add_option("--dims", dims, "Dimensions")->delimiter(',')->capture_default_str();
  bench->add_option("--bins", bins, "Bins per sweep")->delimiter(',')->capture_default_str();
  bench->add_option("--batch", batch, "Batch size")->capture_default_str();
  bench->add_option("--reps", reps, "Repetitions")->capture_default_str();
  bench->add_option("--eps", eps, "Bracket tolerance")->capture_default_str();
  bench->add_flag("--no-timing", no_timing, "Omit wall-clock columns (deterministic output)");
  bench->add_option("--out", out, "CSV")->required();
  add_seed(bench);

  int resolution = 64;
  std::string pot_config;
  auto* grid = app.add_subcommand("export-grid", "Density or potential with forces on a regular grid");
  auto* g_model = grid->add_option("--model", model, "Model checkpoint JSON (unit coordinates)");
  auto* g_pot = grid->add_option("--potential", pot_config, "Run config JSON whose potential is exported (native coordinates)");
  g_model->excludes(g_pot);
  grid->add_option("--resolution", resolution, "Points per axis")->capture_default_str();
  grid->add_option("--out", out, "CSV")->required();
  add_seed(grid);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (gen->parsed())
    return run("gen-data", [&](sf_string** s) { return sf_cmd_gen_data(config.c_str(), out.c_str(), seed_ptr(seed), s); });
  if (train->parsed())
    return run("train", [&](sf_string** s) { return sf_cmd_train(config.c_str(), data.c_str(), out.c_str(), seed_ptr(seed), s); });
  if (eval->parsed())
    return run("eval", [&](sf_string** s) {
      return sf_cmd_eval(model.c_str(), data.c_str(), c_or_null(out), kld_samples, seed_ptr(seed), s);
    });
  if (md->parsed()) {
    if (model.empty() && !use_potential) {
      std::fprintf(stderr, "smoothflow mdsim: one of --model or --potential is required\n");
      return kExitConfig;
    }
    return run("mdsim", [&](sf_string** s) {
      return sf_cmd_mdsim(config.c_str(), c_or_null(model), c_or_null(data), out.c_str(), seed_ptr(seed), s);
    });
  }
  if (bench->parsed())
    return run("bench-rootfind", [&](sf_string** s) {
      return sf_cmd_bench_rootfind(dims.data(), dims.size(), bins.data(), bins.size(), batch, reps, eps, seed.value_or(0), !no_timing,
                                   out.c_str(), s);
    });
  if (grid->parsed()) {
    if (model.empty() == pot_config.empty()) {
      std::fprintf(stderr, "smoothflow export-grid: exactly one of --model or --potential is required\n");
      return kExitConfig;
    }
    return run("export-grid",
               [&](sf_string** s) { return sf_cmd_export_grid(c_or_null(model), c_or_null(pot_config), resolution, out.c_str(), s); });
  }
  return kExitConfig;
}
