#pragma once

// Fully connected conditioner networks, evaluated through the ad value types.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "smoothflow/ad.hpp"

namespace smoothflow {

enum class Activation { Swish, Sin, Tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct Featurizer {
  enum class Kind { Identity, CircularCosSin };
  Kind kind = Kind::Identity;
  int frequencies = 1;

  int output_dim(int input_dim) const { return kind == Kind::Identity ? input_dim : 2 * frequencies * input_dim; }
};

/// Hidden layers use the activation; the output layer is linear. Weights are
/// stored (in x out) so that a layer computes X W + b on a row batch.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(int input_dim, const std::vector<int>& hidden, int output_dim, Activation act, Featurizer feat);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  const Featurizer& featurizer() const { return feat_; }

  std::vector<Eigen::MatrixXd>& weights() { return w_; }
  std::vector<Eigen::RowVectorXd>& biases() { return b_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return w_; }
  const std::vector<Eigen::RowVectorXd>& biases() const { return b_; }

  /// Uniform Glorot init for hidden layers; the output layer starts at zero.
  void init(std::mt19937_64& rng, double hidden_gain = 1.0);

  std::size_t num_params() const;
  /// Flat order: for each layer, W row-major then b.
  void get_params(double* out) const;
  void set_params(const double* in);

  nlohmann::json to_json() const;
  static DenseNet from_json(const nlohmann::json& j, const std::string& where);

 private:
  int input_dim_ = 0;
  std::vector<int> sizes_;
  Activation act_ = Activation::Swish;
  Featurizer feat_;
  std::vector<Eigen::MatrixXd> w_;
  std::vector<Eigen::RowVectorXd> b_;
};

template <class T>
struct NetParams {
  std::vector<T> w;
  std::vector<T> b;
};

NetParams<ad::Tensor> net_params_const(const DenseNet& net);
NetParams<ad::Var> net_params_leaves(const DenseNet& net, ad::Tape& tape);
/// Gradients of the leaves, flattened in get_params order.
void net_params_grad(const DenseNet& net, const ad::Tape& tape, const NetParams<ad::Var>& p, double* out);

template <class N>
N featurize(const Featurizer& f, const N& x) {
  const auto d = ad::value(x).cols();
  if (f.kind == Featurizer::Kind::Identity || d == 0) return x;
  std::vector<N> parts;
  for (Eigen::Index c = 0; c < d; ++c) {
    const N u = ad::cols(x, c, 1);
    for (int j = 1; j <= f.frequencies; ++j) {
      const N arg = u * (2.0 * std::numbers::pi * j);
      parts.push_back(cos(arg));
      parts.push_back(sin(arg));
    }
  }
  return ad::hcat(parts);
}

template <class N>
N activate(Activation a, const N& x) {
  switch (a) {
    case Activation::Sin:
      return sin(x);
    case Activation::Tanh:
      return tanh(x);
    case Activation::Swish:
    default:
      return swish(x);
  }
}

/// Network output for a row batch; `input` has input_dim() columns.
template <class N>
N net_forward(const DenseNet& net, const NetParams<ad::base_t<N>>& p, const N& input) {
  N h = featurize(net.featurizer(), input);
  const std::size_t nl = p.w.size();
  for (std::size_t l = 0; l < nl; ++l) {
    h = ad::add_bias(matmul(h, p.w[l]), p.b[l]);
    if (l + 1 < nl) h = activate(net.activation(), h);
  }
  return h;
}

}  // namespace smoothflow
