#include "smoothflow/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smoothflow/config.hpp"
#include "smoothflow/dataset.hpp"
#include "smoothflow/dynamics.hpp"
#include "smoothflow/errors.hpp"
#include "smoothflow/flow.hpp"
#include "smoothflow/json_util.hpp"
#include "smoothflow/training.hpp"

namespace smoothflow {

using nlohmann::json;

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw IoError("cannot write '" + path + "'");
  return o;
}

void close_out(std::ofstream& o, const std::string& path) {
  o.close();
  if (!o) throw IoError("error writing '" + path + "'");
}

FlowModel load_model(const std::string& path) { return FlowModel::from_json(jsonu::read_file(path)); }

UnitPotential unit_potential(const Dataset& ds) {
  if (!ds.meta.contains("potential")) throw ConfigError("dataset metadata has no 'potential'");
  return UnitPotential{ToyPotential::from_json(ds.meta.at("potential"), "dataset.potential"), ds.comp};
}

json row_json(const ValidationRow& r) {
  json j{{"iter", r.iter}, {"nll", r.nll}, {"fme", r.fme}, {"objective", r.objective}};
  if (r.has_kld) j["kld"] = r.kld;
  return j;
}

}  // namespace

std::string cmd_gen_data(const std::string& config_path, const std::string& out_csv, std::optional<std::uint64_t> seed) {
  const RunConfig cfg = RunConfig::load(config_path);
  const std::uint64_t s = seed.value_or(cfg.seed);
  const Dataset ds = make_dataset(cfg.potential, cfg.dataset, s);
  write_dataset(ds, out_csv);
  return "wrote " + std::to_string(ds.size()) + " samples to " + out_csv + " (acceptance " +
         fmt("%.3f", ds.meta["mh"]["acceptance"].get<double>()) + ", dropped " + std::to_string(ds.meta["dropped"].get<std::size_t>()) + ")";
}

std::string cmd_train(const std::string& config_path, const std::string& data_csv, const std::string& out_dir,
                      std::optional<std::uint64_t> seed) {
  const RunConfig cfg = RunConfig::load(config_path);
  const std::uint64_t s = seed.value_or(cfg.seed);
  const Dataset ds = read_dataset(data_csv);
  ModelConfig mc = cfg.model;
  mc.dims = ds.dims();
  mc.domains = ds.comp.domains;
  FlowModel m = build_model(mc, cfg.rootfind, s);
  std::optional<UnitPotential> target;
  if (cfg.train.omega_k > 0) target = unit_potential(ds);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  const std::string metrics_path = (dir / "metrics.csv").string();
  const std::string val_path = (dir / "validation.csv").string();
  auto metrics = open_out(metrics_path);
  auto validation = open_out(val_path);
  const TrainResult r = train(m, ds, target ? &*target : nullptr, cfg.train, s, TrainStreams{&metrics, &validation});
  close_out(metrics, metrics_path);
  close_out(validation, val_path);

  jsonu::write_file((dir / "model.json").string(), m.to_json());
  FlowModel best = m;
  best.set_params(r.best_params);
  jsonu::write_file((dir / "best.json").string(), best.to_json());
  jsonu::write_file((dir / "summary.json").string(),
                    json{{"seed", s}, {"initial", row_json(r.initial)}, {"best", row_json(r.best)}, {"final", row_json(r.last)}});
  return "final validation NLL " + fmt("%.6f", r.last.nll) + " FME " + fmt("%.6g", r.last.fme) + " (initial NLL " +
         fmt("%.6f", r.initial.nll) + ", best objective at iteration " + std::to_string(r.best.iter) + ")";
}

std::string cmd_eval(const std::string& model_path, const std::string& data_csv, const std::string& out_json, int kld_samples,
                     std::optional<std::uint64_t> seed) {
  if (kld_samples < 1) throw std::invalid_argument("eval: kld samples must be >= 1");
  const FlowModel m = load_model(model_path);
  const Dataset ds = read_dataset(data_csv);
  if (ds.dims() != m.dims) throw ConfigError("eval: model and dataset dimensions differ");
  const std::uint64_t s = seed.value_or(0);
  json out{{"n", ds.size()}, {"nll", loss_nll(m, ds.x)}, {"fme", loss_fm(m, ds.x, ds.f)}, {"seed", s}};
  if (ds.meta.contains("potential")) {
    const UnitPotential up = unit_potential(ds);
    const SampleResult smp = sample(m, kld_samples, s);
    Eigen::ArrayXd u;
    Points f;
    up.eval(smp.x, u, f);
    out["kld"] = (smp.log_p + u).mean();
    out["sampling_efficiency"] = kish_efficiency(-u - smp.log_p);
    out["kld_samples"] = kld_samples;
  }
  if (out_json.empty()) return out.dump(2);
  jsonu::write_file(out_json, out);
  std::string msg = "NLL " + fmt("%.6f", out["nll"].get<double>()) + " FME " + fmt("%.6g", out["fme"].get<double>());
  if (out.contains("kld"))
    msg += " KLD " + fmt("%.6f", out["kld"].get<double>()) + " efficiency " + fmt("%.4f", out["sampling_efficiency"].get<double>());
  return msg;
}

std::string cmd_mdsim(const std::string& config_path, const std::string& model_path, const std::string& data_csv,
                      const std::string& out_csv, std::optional<std::uint64_t> seed) {
  const RunConfig cfg = RunConfig::load(config_path);
  const std::uint64_t s = seed.value_or(cfg.seed);
  const int n = cfg.md.replicas;

  std::optional<FlowModel> model;
  std::unique_ptr<ForceField> ff;
  if (!model_path.empty()) {
    model = load_model(model_path);
    ff = std::make_unique<FlowForceField>(*model);
  } else {
    ff = std::make_unique<ToyForceField>(cfg.potential);
  }
  Points starts;
  if (!data_csv.empty()) {
    const Dataset ds = read_dataset(data_csv);
    if (ds.dims() != ff->dims()) throw ConfigError("mdsim: dataset and potential dimensions differ");
    if (static_cast<int>(ds.size()) < n) throw ConfigError("mdsim: dataset has fewer samples than replicas");
    starts = ds.x.topRows(n);
    if (!model)
      for (int d = 0; d < ds.dims(); ++d)
        for (int i = 0; i < n; ++i) starts(i, d) = ds.comp.to_native(d, starts(i, d));
  } else if (model) {
    starts = sample(*model, n, s).x;
  } else {
    MHConfig mh;
    mh.chains = n;
    mh.burn = 200;
    mh.steps = 1;
    starts = mh_sample(cfg.potential, mh, s).x;
  }
  auto out = open_out(out_csv);
  const MDResult r = run_md(*ff, starts, cfg.md, s, &out);
  close_out(out, out_csv);
  return "dt " + fmt("%.6g", r.dt) + ": max per-DOF total-energy std " + fmt("%.3e", r.max_std_per_dof()) + ", max |slope| per DOF " +
         fmt("%.3e", r.max_abs_slope_per_dof()) + " per step over " + std::to_string(r.replicas.size()) + " replicas";
}

std::string cmd_bench_rootfind(const std::vector<int>& dims, const std::vector<int>& bins, int batch, int reps, double eps,
                               std::uint64_t seed, bool timing, const std::string& out_csv) {
  if (dims.empty() || bins.empty()) throw std::invalid_argument("bench-rootfind: dims and bins must be nonempty");
  std::vector<BenchRow> rows;
  for (int d : dims) {
    const auto r = bench_rootfind(d, bins, batch, reps, eps, seed, timing);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  auto out = open_out(out_csv);
  out << bench_csv(rows, timing);
  close_out(out, out_csv);
  std::string msg = "wrote " + std::to_string(rows.size()) + " rows to " + out_csv;
  for (const auto& r : rows)
    msg += "\n  dim " + std::to_string(r.dim) + " K " + std::to_string(r.bins) + ": " + fmt("%.2f", r.mean_iters) + " sweeps";
  return msg;
}

std::string cmd_export_grid(const std::string& model_path, const std::string& config_path, int resolution, const std::string& out_csv) {
  if (model_path.empty() == config_path.empty()) throw std::invalid_argument("export-grid: give exactly one of --model or --config");
  if (resolution < 1) throw std::invalid_argument("export-grid: resolution must be >= 1");
  const int r = resolution;
  Points x(static_cast<Eigen::Index>(r) * r, 2);
  Eigen::ArrayXd value;
  Points force;
  std::string value_name;
  if (!model_path.empty()) {
    const FlowModel m = load_model(model_path);
    if (m.dims != 2) throw ConfigError("export-grid: only two-dimensional models are supported");
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        x(i * r + j, 0) = (i + 0.5) / r;
        x(i * r + j, 1) = (j + 0.5) / r;
      }
    const ForceResult fr = flow_force(m, x);
    value = fr.log_p;
    force = fr.force;
    value_name = "log_density";
  } else {
    const RunConfig cfg = RunConfig::load(config_path);
    if (cfg.potential.dims != 2) throw ConfigError("export-grid: only two-dimensional potentials are supported");
    std::vector<double> lo, hi;
    cfg.potential.native_range(lo, hi);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        x(i * r + j, 0) = lo[0] + (i + 0.5) * (hi[0] - lo[0]) / r;
        x(i * r + j, 1) = lo[1] + (j + 0.5) * (hi[1] - lo[1]) / r;
      }
    cfg.potential.eval(x, value, force);
    value_name = "u";
  }
  auto out = open_out(out_csv);
  out << "x1,x2," << value_name << ",f1,f2\n";
  char buf[160];
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", x(k, 0), x(k, 1), value(k), force(k, 0), force(k, 1));
    out << buf;
  }
  close_out(out, out_csv);
  return "wrote " + std::to_string(x.rows()) + " grid points to " + out_csv;
}

}  // namespace smoothflow
