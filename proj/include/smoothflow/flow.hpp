#pragma once

// Coupling-layer flows on products of intervals and circles.
//
// Layers are stored in density order: the density pass maps data x to base
// z by applying layers front to back; sampling runs them back to front. A
// Forward layer evaluates its mixture transformer analytically on the
// density pass (so sampling needs root finding); an Inverse layer evaluates it
// analytically on the sampling pass and inverts it on the density pass.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "smoothflow/ad.hpp"
#include "smoothflow/dense_net.hpp"
#include "smoothflow/mixture_graph.hpp"
#include "smoothflow/rootfind.hpp"
#include "smoothflow/transform.hpp"

namespace smoothflow {

enum class LayerDirection { Forward, Inverse };

std::string to_string(LayerDirection d);
LayerDirection direction_from_string(const std::string& s);

struct CouplingLayer {
  std::vector<int> cond;   // conditioning dims, may be empty only when d == 1
  std::vector<int> trans;  // transformed dims
  DenseNet conditioner;    // |cond| inputs -> |trans| * transformer.num_params() outputs
  TransformerConfig transformer;  // domain is overridden per dimension
  LayerDirection direction = LayerDirection::Forward;
};

/// Knobs for build_model.
struct ModelConfig {
  int dims = 2;
  std::vector<Domain> domains;  // empty means all Interval
  int layers = 4;
  int components = 40;
  RampSpec ramp = RampSpec::exponential(1.0, 1.0);
  std::vector<int> hidden = {100, 100};
  Activation activation = Activation::Swish;
  int frequencies = 1;  // cosine-basis size for circular conditioning inputs
  LayerDirection direction = LayerDirection::Forward;
  /// "spread": evenly spaced bumps with c = 1/2; "identity": c = 1 exactly (no learning signal).
  std::string init = "spread";

  void validate() const;
};

class FlowModel {
 public:
  int dims = 0;
  std::vector<Domain> domains;
  std::vector<CouplingLayer> layers;
  RootFindConfig rootfind;

  /// Per-dimension transformer config of layer l.
  TransformerConfig transformer_for(const CouplingLayer& l, int dim) const;

  void validate() const;
  std::size_t num_params() const;
  std::vector<double> get_params() const;
  void set_params(const std::vector<double>& p);

  nlohmann::json to_json() const;
  static FlowModel from_json(const nlohmann::json& j);
};

inline constexpr int kModelVersion = 1;

FlowModel build_model(const ModelConfig& cfg, const RootFindConfig& rf, std::uint64_t seed);

/// All layers with c = 1: the identity map.
FlowModel identity_model(int dims, const std::vector<Domain>& domains);

/// Lower bound applied to dy before taking logs.
inline constexpr double kLogDyFloor = 1e-30;

// ---------------------------------------------------------------- generic passes

template <class N>
using ParamSet = std::vector<NetParams<ad::base_t<N>>>;

namespace detail {

template <class N>
N log_floor(const N& dy) {
  const ad::Array& v = ad::value(dy);
  const ad::Mask ok = !(v <= kLogDyFloor);  // NaN passes through
  if (ok.all()) return log(dy);
  return log(ad::where(ok, dy, ad::make_const(dy, ad::Array::Constant(v.rows(), v.cols(), kLogDyFloor))));
}

template <class N>
N layer_raw(const CouplingLayer& l, const NetParams<ad::base_t<N>>& p, const std::vector<N>& col) {
  const Eigen::Index n = ad::value(col[0]).rows();
  if (l.cond.empty()) return net_forward(l.conditioner, p, ad::make_const(col[0], ad::Array(n, 0)));
  std::vector<N> in;
  for (int c : l.cond) in.push_back(col[static_cast<std::size_t>(c)]);
  return net_forward(l.conditioner, p, in.size() == 1 ? in[0] : ad::hcat(in));
}

}  // namespace detail

/// Density pass x -> z in place; returns log|det dz/dx| per row (n x 1).
template <class N>
N density_pass(const FlowModel& m, const ParamSet<N>& params, std::vector<N>& col) {
  const Eigen::Index n = ad::value(col[0]).rows();
  N ld = ad::make_const(col[0], ad::Array::Zero(n, 1));
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const CouplingLayer& l = m.layers[li];
    const N raw = detail::layer_raw(l, params[li], col);
    const Eigen::Index np = l.transformer.num_params();
    for (std::size_t j = 0; j < l.trans.size(); ++j) {
      const auto b = static_cast<std::size_t>(l.trans[j]);
      const TransformerConfig tc = m.transformer_for(l, l.trans[j]);
      const N rj = ad::cols(raw, static_cast<Eigen::Index>(j) * np, np);
      if (l.direction == LayerDirection::Forward) {
        const auto out = mixture_graph(tc, rj, col[b]);
        col[b] = out.y;
        ld = ld + detail::log_floor(out.dy);
      } else {
        const N z = mixture_invert(tc, rj, col[b], m.rootfind);
        const auto out = mixture_graph(tc, rj, z);
        col[b] = z;
        ld = ld - detail::log_floor(out.dy);
      }
    }
  }
  return ld;
}

/// Sampling pass z -> x in place; returns log|det dx/dz| per row.
template <class N>
N sampling_pass(const FlowModel& m, const ParamSet<N>& params, std::vector<N>& col) {
  const Eigen::Index n = ad::value(col[0]).rows();
  N ld = ad::make_const(col[0], ad::Array::Zero(n, 1));
  for (std::size_t li = m.layers.size(); li-- > 0;) {
    const CouplingLayer& l = m.layers[li];
    const N raw = detail::layer_raw(l, params[li], col);
    const Eigen::Index np = l.transformer.num_params();
    for (std::size_t j = 0; j < l.trans.size(); ++j) {
      const auto b = static_cast<std::size_t>(l.trans[j]);
      const TransformerConfig tc = m.transformer_for(l, l.trans[j]);
      const N rj = ad::cols(raw, static_cast<Eigen::Index>(j) * np, np);
      if (l.direction == LayerDirection::Inverse) {
        const auto out = mixture_graph(tc, rj, col[b]);
        col[b] = out.y;
        ld = ld + detail::log_floor(out.dy);
      } else {
        const N x = mixture_invert(tc, rj, col[b], m.rootfind);
        const auto out = mixture_graph(tc, rj, x);
        col[b] = x;
        ld = ld - detail::log_floor(out.dy);
      }
    }
  }
  return ld;
}

ParamSet<ad::Tensor> model_params_const(const FlowModel& m);
ParamSet<ad::Var> model_params_leaves(const FlowModel& m, ad::Tape& tape);
/// Flattened gradient in get_params order.
std::vector<double> model_params_grad(const FlowModel& m, const ad::Tape& tape, const ParamSet<ad::Var>& p);

template <class N>
std::vector<N> split_columns(const N& x) {
  std::vector<N> out;
  for (Eigen::Index c = 0; c < ad::value(x).cols(); ++c) out.push_back(ad::cols(x, c, 1));
  return out;
}

// ---------------------------------------------------------------- plain evaluation

/// Rows are points; one column per dimension.
using Points = Eigen::ArrayXXd;

struct FlowMapResult {
  Points out;
  Eigen::ArrayXd log_det;
};

/// z -> x with log|det dx/dz|.
FlowMapResult flow_forward(const FlowModel& m, const Points& z);
/// x -> z with log|det dz/dx|.
FlowMapResult flow_inverse(const FlowModel& m, const Points& x);
/// log p_f(x) under the uniform base.
Eigen::ArrayXd log_density(const FlowModel& m, const Points& x);

struct ForceResult {
  Eigen::ArrayXd log_p;
  Points force;  // d log p / dx
};
ForceResult flow_force(const FlowModel& m, const Points& x);

struct SampleResult {
  Points x;
  Eigen::ArrayXd log_p;
};
SampleResult sample(const FlowModel& m, int n, std::uint64_t seed);
/// Uniform base draws used by sample().
Points base_draws(int dims, int n, std::mt19937_64& rng);

/// Points must have m.dims columns and lie in the unit cube.
void check_points(const FlowModel& m, const Points& x, const char* what);

}  // namespace smoothflow
