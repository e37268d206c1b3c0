#include "smoothflow/config.hpp"

#include "smoothflow/errors.hpp"
#include "smoothflow/json_util.hpp"

namespace smoothflow {

using nlohmann::json;
using jsonu::get_or;

RootFindConfig rootfind_from_json(const json& j, const std::string& where) {
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j, {"bins", "eps", "max_iter", "lo", "hi", "x_tol"}, where);
  RootFindConfig r;
  r.bins = get_or<int>(j, "bins", r.bins, where);
  r.eps = get_or<double>(j, "eps", r.eps, where);
  r.max_iter = get_or<int>(j, "max_iter", r.max_iter, where);
  r.lo = get_or<double>(j, "lo", r.lo, where);
  r.hi = get_or<double>(j, "hi", r.hi, where);
  r.x_tol = get_or<double>(j, "x_tol", r.x_tol, where);
  try {
    r.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return r;
}

namespace {

MHConfig dataset_from_json(const json& j, const std::string& where) {
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j, {"chains", "burn", "steps", "proposal_std"}, where);
  MHConfig c;
  c.chains = get_or<int>(j, "chains", c.chains, where);
  c.burn = get_or<int>(j, "burn", c.burn, where);
  c.steps = get_or<int>(j, "steps", c.steps, where);
  c.proposal_std = get_or<double>(j, "proposal_std", c.proposal_std, where);
  c.validate();
  return c;
}

ModelConfig model_from_json(const json& j, const std::string& where) {
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j, {"layers", "components", "ramp", "hidden", "activation", "frequencies", "direction", "init"}, where);
  ModelConfig c;
  c.layers = get_or<int>(j, "layers", c.layers, where);
  c.components = get_or<int>(j, "components", c.components, where);
  if (j.contains("ramp")) c.ramp = ramp_from_json(j.at("ramp"), where + ".ramp");
  c.hidden = get_or<std::vector<int>>(j, "hidden", c.hidden, where);
  if (j.contains("activation")) c.activation = activation_from_string(get_or<std::string>(j, "activation", "", where));
  c.frequencies = get_or<int>(j, "frequencies", c.frequencies, where);
  if (j.contains("direction")) c.direction = direction_from_string(get_or<std::string>(j, "direction", "", where));
  c.init = get_or<std::string>(j, "init", c.init, where);
  return c;
}

TrainConfig train_from_json(const json& j, const std::string& where) {
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j,
                        {"omega_n", "omega_k", "omega_f", "normalized", "lr", "lr_decay", "batch_size", "iterations", "kld_batch",
                         "kld_cutoff", "val_fraction", "eval_every", "beta1", "beta2", "adam_eps"},
                        where);
  TrainConfig c;
  c.omega_n = get_or<double>(j, "omega_n", c.omega_n, where);
  c.omega_k = get_or<double>(j, "omega_k", c.omega_k, where);
  c.omega_f = get_or<double>(j, "omega_f", c.omega_f, where);
  c.normalized = get_or<bool>(j, "normalized", c.normalized, where);
  c.lr = get_or<double>(j, "lr", c.lr, where);
  c.lr_decay = get_or<double>(j, "lr_decay", c.lr_decay, where);
  c.batch_size = get_or<int>(j, "batch_size", c.batch_size, where);
  c.iterations = get_or<int>(j, "iterations", c.iterations, where);
  c.kld_batch = get_or<int>(j, "kld_batch", c.kld_batch, where);
  c.kld_cutoff = get_or<bool>(j, "kld_cutoff", c.kld_cutoff, where);
  c.val_fraction = get_or<double>(j, "val_fraction", c.val_fraction, where);
  c.eval_every = get_or<int>(j, "eval_every", c.eval_every, where);
  c.beta1 = get_or<double>(j, "beta1", c.beta1, where);
  c.beta2 = get_or<double>(j, "beta2", c.beta2, where);
  c.adam_eps = get_or<double>(j, "adam_eps", c.adam_eps, where);
  c.validate();
  return c;
}

MDConfig md_from_json(const json& j, const std::string& where) {
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j,
                        {"dt", "equil_steps", "prod_steps", "friction", "temperature", "mass", "replicas", "record_every", "dt_sweep",
                         "dt_target_std", "dt_sweep_steps", "dt_sweep_max_halvings"},
                        where);
  MDConfig c;
  c.dt = get_or<double>(j, "dt", c.dt, where);
  c.equil_steps = get_or<int>(j, "equil_steps", c.equil_steps, where);
  c.prod_steps = get_or<int>(j, "prod_steps", c.prod_steps, where);
  c.friction = get_or<double>(j, "friction", c.friction, where);
  c.temperature = get_or<double>(j, "temperature", c.temperature, where);
  c.mass = get_or<double>(j, "mass", c.mass, where);
  c.replicas = get_or<int>(j, "replicas", c.replicas, where);
  c.record_every = get_or<int>(j, "record_every", c.record_every, where);
  c.dt_sweep = get_or<bool>(j, "dt_sweep", c.dt_sweep, where);
  c.dt_target_std = get_or<double>(j, "dt_target_std", c.dt_target_std, where);
  c.dt_sweep_steps = get_or<int>(j, "dt_sweep_steps", c.dt_sweep_steps, where);
  c.dt_sweep_max_halvings = get_or<int>(j, "dt_sweep_max_halvings", c.dt_sweep_max_halvings, where);
  c.validate();
  return c;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  const std::string where = "config";
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j, {"schema_version", "seed", "output_dir", "potential", "dataset", "model", "train", "rootfind", "md"}, where);
  RunConfig c;
  c.schema_version = jsonu::get_required<int>(j, "schema_version", where);
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, where);
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir, where);
  if (j.contains("potential")) c.potential = ToyPotential::from_json(j.at("potential"), "config.potential");
  c.potential.validate();
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"), "config.dataset");
  if (j.contains("model")) c.model = model_from_json(j.at("model"), "config.model");
  c.model.dims = c.potential.dims;
  c.model.domains = c.potential.domains();
  c.model.validate();
  if (j.contains("train")) c.train = train_from_json(j.at("train"), "config.train");
  if (j.contains("rootfind")) c.rootfind = rootfind_from_json(j.at("rootfind"), "config.rootfind");
  if (j.contains("md")) c.md = md_from_json(j.at("md"), "config.md");
  return c;
}

RunConfig RunConfig::load(const std::string& path) { return from_json(jsonu::read_file(path)); }

json RunConfig::to_json() const {
  json model_j{{"layers", model.layers},
             {"components", model.components},
             {"ramp", ramp_to_json(model.ramp)},
             {"hidden", model.hidden},
             {"activation", to_string(model.activation)},
             {"frequencies", model.frequencies},
             {"direction", to_string(model.direction)},
             {"init", model.init}};
  json train_j{{"omega_n", train.omega_n},       {"omega_k", train.omega_k},       {"omega_f", train.omega_f},
               {"normalized", train.normalized}, {"lr", train.lr},                 {"lr_decay", train.lr_decay},
               {"batch_size", train.batch_size}, {"iterations", train.iterations}, {"kld_batch", train.kld_batch},
               {"kld_cutoff", train.kld_cutoff}, {"val_fraction", train.val_fraction}, {"eval_every", train.eval_every},
               {"beta1", train.beta1},           {"beta2", train.beta2},           {"adam_eps", train.adam_eps}};
  json md_j{{"dt", md.dt},
            {"equil_steps", md.equil_steps},
            {"prod_steps", md.prod_steps},
            {"friction", md.friction},
            {"temperature", md.temperature},
            {"mass", md.mass},
            {"replicas", md.replicas},
            {"record_every", md.record_every},
            {"dt_sweep", md.dt_sweep},
            {"dt_target_std", md.dt_target_std},
            {"dt_sweep_steps", md.dt_sweep_steps},
            {"dt_sweep_max_halvings", md.dt_sweep_max_halvings}};
  return {{"schema_version", schema_version},
          {"seed", seed},
          {"output_dir", output_dir},
          {"potential", potential.to_json()},
          {"dataset",
           {{"chains", dataset.chains}, {"burn", dataset.burn}, {"steps", dataset.steps}, {"proposal_std", dataset.proposal_std}}},
          {"model", model_j},
          {"train", train_j},
          {"rootfind",
           {{"bins", rootfind.bins}, {"eps", rootfind.eps}, {"max_iter", rootfind.max_iter}, {"lo", rootfind.lo}, {"hi", rootfind.hi},
            {"x_tol", rootfind.x_tol}}},
          {"md", md_j}};
}

}  // namespace smoothflow
