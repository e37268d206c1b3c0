#include "smoothflow/dense_net.hpp"

#include <stdexcept>

#include "smoothflow/json_util.hpp"

namespace smoothflow {

using nlohmann::json;

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Sin:
      return "sin";
    case Activation::Tanh:
      return "tanh";
    case Activation::Swish:
    default:
      return "swish";
  }
}

Activation activation_from_string(const std::string& s) {
  if (s == "swish") return Activation::Swish;
  if (s == "sin") return Activation::Sin;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "' (expected swish, sin or tanh)");
}

DenseNet::DenseNet(int input_dim, const std::vector<int>& hidden, int output_dim, Activation act, Featurizer feat)
    : input_dim_(input_dim), act_(act), feat_(feat) {
  if (input_dim < 0 || output_dim < 1) throw std::invalid_argument("dense net: bad input/output size");
  if (feat.kind == Featurizer::Kind::CircularCosSin && feat.frequencies < 1)
    throw std::invalid_argument("dense net: circular featurizer needs >= 1 frequency");
  sizes_.push_back(feat.output_dim(input_dim));
  // Without inputs the net is a constant: hidden layers would be dead weight.
  if (input_dim > 0)
    for (int h : hidden) {
      if (h < 1) throw std::invalid_argument("dense net: hidden sizes must be positive");
      sizes_.push_back(h);
    }
  sizes_.push_back(output_dim);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_.push_back(Eigen::MatrixXd::Zero(sizes_[l], sizes_[l + 1]));
    b_.push_back(Eigen::RowVectorXd::Zero(sizes_[l + 1]));
  }
}

void DenseNet::init(std::mt19937_64& rng, double hidden_gain) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    if (l + 1 == w_.size()) {
      w_[l].setZero();
      continue;
    }
    const double lim = hidden_gain * std::sqrt(6.0 / (w_[l].rows() + w_[l].cols()));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (Eigen::Index i = 0; i < w_[l].rows(); ++i)
      for (Eigen::Index j = 0; j < w_[l].cols(); ++j) w_[l](i, j) = u(rng);
    b_[l].setZero();
  }
}

std::size_t DenseNet::num_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < w_.size(); ++l) n += static_cast<std::size_t>(w_[l].size() + b_[l].size());
  return n;
}

void DenseNet::get_params(double* out) const {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    for (Eigen::Index i = 0; i < w_[l].rows(); ++i)
      for (Eigen::Index j = 0; j < w_[l].cols(); ++j) *out++ = w_[l](i, j);
    for (Eigen::Index j = 0; j < b_[l].size(); ++j) *out++ = b_[l](j);
  }
}

void DenseNet::set_params(const double* in) {
  for (std::size_t l = 0; l < w_.size(); ++l) {
    for (Eigen::Index i = 0; i < w_[l].rows(); ++i)
      for (Eigen::Index j = 0; j < w_[l].cols(); ++j) w_[l](i, j) = *in++;
    for (Eigen::Index j = 0; j < b_[l].size(); ++j) b_[l](j) = *in++;
  }
}

json DenseNet::to_json() const {
  json w = json::array(), b = json::array();
  for (std::size_t l = 0; l < w_.size(); ++l) {
    json wl = json::array(), bl = json::array();
    for (Eigen::Index i = 0; i < w_[l].rows(); ++i)
      for (Eigen::Index j = 0; j < w_[l].cols(); ++j) wl.push_back(w_[l](i, j));
    for (Eigen::Index j = 0; j < b_[l].size(); ++j) bl.push_back(b_[l](j));
    w.push_back(wl);
    b.push_back(bl);
  }
  json feat = {{"kind", feat_.kind == Featurizer::Kind::Identity ? "identity" : "circular"}};
  if (feat_.kind == Featurizer::Kind::CircularCosSin) feat["frequencies"] = feat_.frequencies;
  return {{"input_dim", input_dim_}, {"sizes", sizes_},   {"activation", to_string(act_)},
          {"featurizer", feat},      {"weights", w},      {"biases", b}};
}

DenseNet DenseNet::from_json(const json& j, const std::string& where) {
  jsonu::reject_unknown(j, {"input_dim", "sizes", "activation", "featurizer", "weights", "biases"}, where);
  const json& fj = j.at("featurizer");
  jsonu::reject_unknown(fj, {"kind", "frequencies"}, where + ".featurizer");
  Featurizer f;
  const auto kind = jsonu::get_required<std::string>(fj, "kind", where + ".featurizer");
  if (kind == "identity")
    f.kind = Featurizer::Kind::Identity;
  else if (kind == "circular")
    f.kind = Featurizer::Kind::CircularCosSin, f.frequencies = jsonu::get_required<int>(fj, "frequencies", where + ".featurizer");
  else
    throw ConfigError(where + ".featurizer: unknown kind '" + kind + "'");
  const int in = jsonu::get_required<int>(j, "input_dim", where);
  const auto sizes = jsonu::get_required<std::vector<int>>(j, "sizes", where);
  if (sizes.size() < 2 || sizes.front() != f.output_dim(in)) throw ConfigError(where + ": sizes inconsistent with input_dim/featurizer");
  std::vector<int> hidden(sizes.begin() + 1, sizes.end() - 1);
  DenseNet net(in, hidden, sizes.back(), activation_from_string(jsonu::get_required<std::string>(j, "activation", where)), f);
  if (net.sizes_ != sizes) throw ConfigError(where + ": sizes inconsistent with input_dim");
  const json& w = j.at("weights");
  const json& b = j.at("biases");
  if (!w.is_array() || !b.is_array() || w.size() != net.w_.size() || b.size() != net.b_.size())
    throw ConfigError(where + ": weights/biases do not match sizes");
  for (std::size_t l = 0; l < net.w_.size(); ++l) {
    const auto wl = w[l].get<std::vector<double>>();
    const auto bl = b[l].get<std::vector<double>>();
    if (wl.size() != static_cast<std::size_t>(net.w_[l].size()) || bl.size() != static_cast<std::size_t>(net.b_[l].size()))
      throw ConfigError(where + ": layer " + std::to_string(l) + " has the wrong number of entries");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < net.w_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < net.w_[l].cols(); ++c) net.w_[l](r, c) = wl[k++];
    for (Eigen::Index c = 0; c < net.b_[l].size(); ++c) net.b_[l](c) = bl[static_cast<std::size_t>(c)];
  }
  return net;
}

NetParams<ad::Tensor> net_params_const(const DenseNet& net) {
  NetParams<ad::Tensor> p;
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    p.w.emplace_back(ad::Array(net.weights()[l].array()));
    p.b.emplace_back(ad::Array(net.biases()[l].array()));
  }
  return p;
}

NetParams<ad::Var> net_params_leaves(const DenseNet& net, ad::Tape& tape) {
  NetParams<ad::Var> p;
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    p.w.push_back(tape.leaf(net.weights()[l].array()));
    p.b.push_back(tape.leaf(net.biases()[l].array()));
  }
  return p;
}

void net_params_grad(const DenseNet& net, const ad::Tape& tape, const NetParams<ad::Var>& p, double* out) {
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    const ad::Array gw = tape.grad(p.w[l]);
    const ad::Array gb = tape.grad(p.b[l]);
    for (Eigen::Index i = 0; i < gw.rows(); ++i)
      for (Eigen::Index j = 0; j < gw.cols(); ++j) *out++ = gw(i, j);
    for (Eigen::Index j = 0; j < gb.size(); ++j) *out++ = gb(j);
  }
}

}  // namespace smoothflow
