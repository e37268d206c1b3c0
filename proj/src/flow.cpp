#include "smoothflow/flow.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "smoothflow/json_util.hpp"

namespace smoothflow {

using ad::Array;
using nlohmann::json;

std::string to_string(LayerDirection d) { return d == LayerDirection::Forward ? "forward" : "inverse"; }

LayerDirection direction_from_string(const std::string& s) {
  if (s == "forward") return LayerDirection::Forward;
  if (s == "inverse") return LayerDirection::Inverse;
  throw ConfigError("unknown layer direction '" + s + "' (expected forward|inverse)");
}

void ModelConfig::validate() const {
  if (dims < 1) throw ConfigError("model.dims must be >= 1");
  if (!domains.empty() && static_cast<int>(domains.size()) != dims) throw ConfigError("model.domains must have dims entries");
  if (layers < 1) throw ConfigError("model.layers must be >= 1");
  if (components < 1) throw ConfigError("model.components must be >= 1");
  if (frequencies < 1) throw ConfigError("model.frequencies must be >= 1");
  for (int h : hidden)
    if (h < 1) throw ConfigError("model.hidden sizes must be >= 1");
  if (init != "spread" && init != "identity") throw ConfigError("model.init must be spread|identity");
  try {
    ramp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model.ramp: ") + e.what());
  }
}

TransformerConfig FlowModel::transformer_for(const CouplingLayer& l, int dim) const {
  TransformerConfig c = l.transformer;
  c.domain = domains[static_cast<std::size_t>(dim)];
  return c;
}

void FlowModel::validate() const {
  if (dims < 1) throw ConfigError("flow: dims must be >= 1");
  if (static_cast<int>(domains.size()) != dims) throw ConfigError("flow: one domain tag per dimension required");
  if (layers.empty()) throw ConfigError("flow: at least one layer required");
  rootfind.validate();
  std::vector<char> covered(static_cast<std::size_t>(dims), 0);
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    const std::string where = "flow.layers[" + std::to_string(li) + "]";
    std::set<int> seen;
    for (int c : l.cond) seen.insert(c);
    for (int t : l.trans) seen.insert(t);
    if (seen.size() != static_cast<std::size_t>(dims) || l.cond.size() + l.trans.size() != static_cast<std::size_t>(dims) ||
        *seen.begin() != 0 || *seen.rbegin() != dims - 1)
      throw ConfigError(where + ": mask must partition the dimensions");
    if (l.trans.empty()) throw ConfigError(where + ": transformed set is empty");
    if (l.cond.empty() && dims > 1) throw ConfigError(where + ": conditioning set is empty");
    l.transformer.validate();
    if (l.conditioner.input_dim() != static_cast<int>(l.cond.size()))
      throw ConfigError(where + ": conditioner input size does not match the mask");
    if (l.conditioner.output_dim() != static_cast<int>(l.trans.size()) * l.transformer.num_params())
      throw ConfigError(where + ": conditioner output size does not match the transformer");
    for (int t : l.trans) covered[static_cast<std::size_t>(t)] = 1;
  }
  for (int d = 0; d < dims; ++d)
    if (!covered[static_cast<std::size_t>(d)]) throw ConfigError("flow: dimension " + std::to_string(d) + " is never transformed");
}

std::size_t FlowModel::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.conditioner.num_params();
  return n;
}

std::vector<double> FlowModel::get_params() const {
  std::vector<double> p(num_params());
  double* out = p.data();
  for (const auto& l : layers) {
    l.conditioner.get_params(out);
    out += l.conditioner.num_params();
  }
  return p;
}

void FlowModel::set_params(const std::vector<double>& p) {
  if (p.size() != num_params()) throw std::invalid_argument("flow: parameter count mismatch");
  const double* in = p.data();
  for (auto& l : layers) {
    l.conditioner.set_params(in);
    in += l.conditioner.num_params();
  }
}

json FlowModel::to_json() const {
  json j;
  j["version"] = kModelVersion;
  j["dims"] = dims;
  json tags = json::array();
  for (Domain d : domains) tags.push_back(to_string(d));
  j["domain_tags"] = tags;
  j["rootfind"] = {{"bins", rootfind.bins}, {"eps", rootfind.eps}, {"max_iter", rootfind.max_iter}, {"x_tol", rootfind.x_tol}};
  json ls = json::array();
  for (const auto& l : layers) {
    std::vector<int> mask(static_cast<std::size_t>(dims), 0);
    for (int t : l.trans) mask[static_cast<std::size_t>(t)] = 1;
    ls.push_back({{"mask", mask},
                  {"conditioner", l.conditioner.to_json()},
                  {"transformer_cfg", transformer_to_json(l.transformer)},
                  {"direction", to_string(l.direction)}});
  }
  j["layers"] = ls;
  return j;
}

FlowModel FlowModel::from_json(const json& j) {
  const std::string where = "model";
  jsonu::require_object(j, where);
  jsonu::reject_unknown(j, {"version", "dims", "domain_tags", "rootfind", "layers"}, where);
  const int version = jsonu::get_required<int>(j, "version", where);
  if (version != kModelVersion) throw ConfigError("model: unsupported version " + std::to_string(version));
  FlowModel m;
  m.dims = jsonu::get_required<int>(j, "dims", where);
  for (const auto& t : jsonu::get_required<std::vector<std::string>>(j, "domain_tags", where)) m.domains.push_back(domain_from_string(t));
  if (j.contains("rootfind")) {
    const json& r = j.at("rootfind");
    jsonu::reject_unknown(r, {"bins", "eps", "max_iter", "x_tol"}, where + ".rootfind");
    m.rootfind.bins = jsonu::get_or<int>(r, "bins", m.rootfind.bins, where + ".rootfind");
    m.rootfind.eps = jsonu::get_or<double>(r, "eps", m.rootfind.eps, where + ".rootfind");
    m.rootfind.max_iter = jsonu::get_or<int>(r, "max_iter", m.rootfind.max_iter, where + ".rootfind");
    m.rootfind.x_tol = jsonu::get_or<double>(r, "x_tol", m.rootfind.x_tol, where + ".rootfind");
  }
  if (!j.contains("layers") || !j.at("layers").is_array()) throw ConfigError("model: 'layers' must be an array");
  std::size_t li = 0;
  for (const auto& lj : j.at("layers")) {
    const std::string lw = where + ".layers[" + std::to_string(li++) + "]";
    jsonu::require_object(lj, lw);
    jsonu::reject_unknown(lj, {"mask", "conditioner", "transformer_cfg", "direction"}, lw);
    CouplingLayer l;
    const auto mask = jsonu::get_required<std::vector<int>>(lj, "mask", lw);
    if (static_cast<int>(mask.size()) != m.dims) throw ConfigError(lw + ": mask length must equal dims");
    for (int d = 0; d < m.dims; ++d) {
      const int v = mask[static_cast<std::size_t>(d)];
      if (v != 0 && v != 1) throw ConfigError(lw + ": mask entries must be 0 or 1");
      (v ? l.trans : l.cond).push_back(d);
    }
    if (!lj.contains("conditioner")) throw ConfigError(lw + ": missing required key 'conditioner'");
    l.conditioner = DenseNet::from_json(lj.at("conditioner"), lw + ".conditioner");
    if (!lj.contains("transformer_cfg")) throw ConfigError(lw + ": missing required key 'transformer_cfg'");
    l.transformer = transformer_from_json(lj.at("transformer_cfg"), lw + ".transformer_cfg");
    l.direction = direction_from_string(jsonu::get_required<std::string>(lj, "direction", lw));
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

FlowModel build_model(const ModelConfig& cfg, const RootFindConfig& rf, std::uint64_t seed) {
  cfg.validate();
  FlowModel m;
  m.dims = cfg.dims;
  m.domains = cfg.domains.empty() ? std::vector<Domain>(static_cast<std::size_t>(cfg.dims), Domain::Interval) : cfg.domains;
  m.rootfind = rf;
  std::mt19937_64 rng(seed);
  const int d = cfg.dims;
  for (int li = 0; li < cfg.layers; ++li) {
    CouplingLayer l;
    if (d == 1) {
      l.trans = {0};
    } else {
      // Alternate which half is transformed; for d = 2 this swaps the two coordinates.
      const int half = d / 2;
      for (int k = 0; k < d; ++k) {
        const bool first = k < half;
        ((li % 2 == 0) != first ? l.trans : l.cond).push_back(k);
      }
    }
    l.transformer.ramp = cfg.ramp;
    l.transformer.components = cfg.components;
    l.direction = cfg.direction;
    bool circular = !l.cond.empty();
    for (int c : l.cond) circular = circular && m.domains[static_cast<std::size_t>(c)] == Domain::Circle;
    Featurizer feat;
    if (circular) {
      feat.kind = Featurizer::Kind::CircularCosSin;
      feat.frequencies = cfg.frequencies;
    }
    const int np = l.transformer.num_params();
    l.conditioner = DenseNet(static_cast<int>(l.cond.size()), cfg.hidden, static_cast<int>(l.trans.size()) * np, cfg.activation, feat);
    l.conditioner.init(rng);
    // Zero output weights: every row starts from the same transformer.
    auto& bias = l.conditioner.biases().back();
    for (std::size_t j = 0; j < l.trans.size(); ++j) {
      const TransformerConfig tc = m.transformer_for(l, l.trans[j]);
      const auto raw = (cfg.init == "identity" ? MixtureTransform::identity(tc) : MixtureTransform::spread(tc)).params();
      for (int k = 0; k < np; ++k) bias(static_cast<Eigen::Index>(j) * np + k) = raw[static_cast<std::size_t>(k)];
    }
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

FlowModel identity_model(int dims, const std::vector<Domain>& domains) {
  ModelConfig c;
  c.dims = dims;
  c.domains = domains;
  c.layers = dims == 1 ? 1 : 2;
  c.components = 2;
  c.hidden = {4};
  c.init = "identity";
  return build_model(c, RootFindConfig{}, 0);
}

ParamSet<ad::Tensor> model_params_const(const FlowModel& m) {
  ParamSet<ad::Tensor> p;
  for (const auto& l : m.layers) p.push_back(net_params_const(l.conditioner));
  return p;
}

ParamSet<ad::Var> model_params_leaves(const FlowModel& m, ad::Tape& tape) {
  ParamSet<ad::Var> p;
  for (const auto& l : m.layers) p.push_back(net_params_leaves(l.conditioner, tape));
  return p;
}

std::vector<double> model_params_grad(const FlowModel& m, const ad::Tape& tape, const ParamSet<ad::Var>& p) {
  std::vector<double> g(m.num_params());
  double* out = g.data();
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    net_params_grad(m.layers[li].conditioner, tape, p[li], out);
    out += m.layers[li].conditioner.num_params();
  }
  return g;
}

void check_points(const FlowModel& m, const Points& x, const char* what) {
  if (x.cols() != m.dims) throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(m.dims) + " columns");
  if (x.rows() == 0) throw std::invalid_argument(std::string(what) + ": empty batch");
  if (!x.allFinite() || (x < 0.0).any() || (x > 1.0).any())
    throw std::domain_error(std::string(what) + ": points must lie in the unit cube");
}

namespace {

Points join(const std::vector<ad::Tensor>& col) {
  Points out(col[0].rows(), static_cast<Eigen::Index>(col.size()));
  for (std::size_t c = 0; c < col.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = col[c].v.col(0);
  return out;
}

std::vector<ad::Tensor> columns(const Points& x) {
  std::vector<ad::Tensor> col;
  for (Eigen::Index c = 0; c < x.cols(); ++c) col.emplace_back(Array(x.col(c)));
  return col;
}

}  // namespace

FlowMapResult flow_forward(const FlowModel& m, const Points& z) {
  check_points(m, z, "flow_forward");
  auto col = columns(z);
  const ad::Tensor ld = sampling_pass(m, model_params_const(m), col);
  return {join(col), ld.v.col(0)};
}

FlowMapResult flow_inverse(const FlowModel& m, const Points& x) {
  check_points(m, x, "flow_inverse");
  auto col = columns(x);
  const ad::Tensor ld = density_pass(m, model_params_const(m), col);
  return {join(col), ld.v.col(0)};
}

Eigen::ArrayXd log_density(const FlowModel& m, const Points& x) { return flow_inverse(m, x).log_det; }

ForceResult flow_force(const FlowModel& m, const Points& x) {
  check_points(m, x, "flow_force");
  using D = ad::Dual<ad::Tensor>;
  const auto nd = static_cast<std::size_t>(m.dims);
  std::vector<D> col;
  for (std::size_t c = 0; c < nd; ++c) col.push_back(ad::seed(ad::Tensor(Array(x.col(static_cast<Eigen::Index>(c)))), c, nd));
  ParamSet<D> params = model_params_const(m);
  const D ld = density_pass(m, params, col);
  ForceResult r;
  r.log_p = ld.v.v.col(0);
  r.force.resize(x.rows(), m.dims);
  for (std::size_t c = 0; c < nd; ++c) r.force.col(static_cast<Eigen::Index>(c)) = ad::tangent_value(ld, c).col(0);
  return r;
}

Points base_draws(int dims, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points z(n, dims);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < dims; ++c) z(i, c) = u(rng);
  return z;
}

SampleResult sample(const FlowModel& m, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::mt19937_64 rng(seed);
  const Points z = base_draws(m.dims, n, rng);
  const auto r = flow_forward(m, z);
  return {r.out, -r.log_det};
}

}  // namespace smoothflow
