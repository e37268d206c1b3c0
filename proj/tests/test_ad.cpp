#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "smoothflow/ad.hpp"
#include "smoothflow/dense_net.hpp"

using namespace smoothflow;
using ad::Array;

namespace {

// A scalar function of a (3 x 2) input that exercises most of the vocabulary.
template <class N>
N composite(const N& x) {
  const ad::RampW rw{RampKind::Exponential, 1.5};
  const N t = sigmoid(x) * 0.8 + 0.1;
  N h = exp(x * 0.3) + log(t) + softplus(x) * tanh(x) - sin(x) * cos(x) + swish(x) / (2.0 + square(x));
  h = h + powr(t, 1.7) + rampw(t, rw, 0) * 0.01 + rampw(t, rw, 1) * 1e-3;
  const N r = ad::rowsum(h);
  const N c = ad::hcat(std::vector<N>{ad::cols(h, 0, 1), r, ad::repcols(ad::cols(h, 1, 1), 2)});
  const ad::Mask m = ad::value(x) > 0.0;
  const N w = ad::where(m, ad::cols(c, 0, 2), square(x));
  return ad::mean_all(w) + ad::sum_all(c) / 3.0;
}

}  // namespace

TEST_CASE("gradient of a squared derivative") {
  ad::Tape tape;
  const ad::Var x = tape.leaf(Array::Constant(1, 1, 1.0));
  const auto d = ad::seed(x, 0, 1);
  const auto f = d * d;                    // f = x^2, tangent f' = 2x
  const ad::Var fp = *f.tangent(0);
  const ad::Var loss = ad::sum_all(fp * fp);  // (f')^2 = 4x^2
  tape.backward(loss);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("forward over reverse gives Hessian vector products") {
  // f(a, b) = a^2 b + 3 b^2 + sin(a): H = [[2b - sin a, 2a], [2a, 6]].
  const double a0 = 0.7, b0 = -1.3, va = 0.4, vb = 2.0;
  ad::Tape tape;
  const ad::Var a = tape.leaf(Array::Constant(1, 1, a0));
  const ad::Var b = tape.leaf(Array::Constant(1, 1, b0));
  ad::Dual<ad::Var> da{a, {tape.constant(Array::Constant(1, 1, va))}};
  ad::Dual<ad::Var> db{b, {tape.constant(Array::Constant(1, 1, vb))}};
  const auto f = da * da * db + 3.0 * db * db + sin(da);
  tape.backward(ad::sum_all(*f.tangent(0)));
  CHECK(tape.grad(a)(0, 0) == doctest::Approx((2 * b0 - std::sin(a0)) * va + 2 * a0 * vb).epsilon(1e-14));
  CHECK(tape.grad(b)(0, 0) == doctest::Approx(2 * a0 * va + 6 * vb).epsilon(1e-14));
}

TEST_CASE("reverse mode matches finite differences across operations") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1.0);
  Array x0(3, 2);
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = nd(rng);
  ad::Tape tape;
  const ad::Var x = tape.leaf(x0);
  tape.backward(composite(x));
  const Array g = tape.grad(x);
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    Array xp = x0, xm = x0;
    xp(i) += 1e-6;
    xm(i) -= 1e-6;
    const double fd = (composite(ad::Tensor(xp)).v(0, 0) - composite(ad::Tensor(xm)).v(0, 0)) / 2e-6;
    CHECK(oracle::rel_err(g(i), fd, 1e-6) < 1e-6);
  }
}

TEST_CASE("forward tangents match finite differences across operations") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 1.0);
  Array x0(3, 2), v(3, 2);
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    x0(i) = nd(rng);
    v(i) = nd(rng);
  }
  const ad::Dual<ad::Tensor> d{ad::Tensor(x0), {ad::Tensor(v)}};
  const double jv = ad::tangent_value(composite(d), 0)(0, 0);
  const double h = 1e-6;
  const double fd = (composite(ad::Tensor(x0 + h * v)).v(0, 0) - composite(ad::Tensor(x0 - h * v)).v(0, 0)) / (2 * h);
  CHECK(oracle::rel_err(jv, fd, 1e-6) < 1e-6);
}

TEST_CASE("rampw derivatives are consistent") {
  const ad::RampW rw{RampKind::Exponential, 2.0};
  Array t(1, 3);
  t << 0.2, 0.5, 0.85;
  for (int order = 0; order < 3; ++order) {
    const Array d = ad::rampw_eval(rw, t, order + 1);
    const Array fd = (ad::rampw_eval(rw, t + 1e-6, order) - ad::rampw_eval(rw, t - 1e-6, order)) / 2e-6;
    for (int i = 0; i < 3; ++i) CHECK(oracle::rel_err(d(0, i), fd(0, i), 1e-2) < 1e-6);
  }
  // w = (1 - t)^-2 - t^-2
  CHECK(ad::rampw_eval(rw, t, 0)(0, 0) == doctest::Approx(1.0 / 0.64 - 25.0).epsilon(1e-14));
}

TEST_CASE("shape mismatches are reported") {
  CHECK_THROWS(ad::Tensor(Array::Zero(2, 2)) + ad::Tensor(Array::Zero(3, 2)));
}

TEST_CASE("zero-weight net returns its biases") {
  DenseNet net(2, {5}, 3, Activation::Tanh, {});
  net.biases()[1] << 0.1, -0.2, 0.3;
  const auto out = net_forward(net, net_params_const(net), ad::Tensor(Array::Random(4, 2)));
  for (int r = 0; r < 4; ++r) {
    CHECK(out.v(r, 0) == 0.1);
    CHECK(out.v(r, 2) == 0.3);
  }
}

TEST_CASE("single linear layer computes xW + b") {
  DenseNet net(2, {}, 2, Activation::Swish, {});
  net.weights()[0] << 1, 2, 3, 4;
  net.biases()[0] << 0.5, -1;
  Array x(1, 2);
  x << 2, -1;
  const auto out = net_forward(net, net_params_const(net), ad::Tensor(x));
  CHECK(out.v(0, 0) == doctest::Approx(2 * 1 - 1 * 3 + 0.5));
  CHECK(out.v(0, 1) == doctest::Approx(2 * 2 - 1 * 4 - 1));
}

TEST_CASE("network weight gradients match finite differences") {
  struct Arch {
    int in;
    std::vector<int> hidden;
    int out;
    Activation act;
    Featurizer feat;
  };
  const std::vector<Arch> archs{{1, {4}, 2, Activation::Swish, {}},
                                {2, {6, 5}, 3, Activation::Tanh, {}},
                                {2, {7}, 4, Activation::Sin, {Featurizer::Kind::CircularCosSin, 2}}};
  std::mt19937_64 rng(5);
  for (const auto& a : archs) {
    DenseNet net(a.in, a.hidden, a.out, a.act, a.feat);
    net.init(rng);
    // Nonzero output layer so every weight receives gradient.
    for (Eigen::Index i = 0; i < net.weights().back().size(); ++i) net.weights().back()(i) = 0.1 * static_cast<double>(i % 7) - 0.3;
    const Array x = Array::Random(5, a.in);
    ad::Tape tape;
    const auto p = net_params_leaves(net, tape);
    tape.backward(ad::sum_all(net_forward(net, p, tape.constant(x))));
    std::vector<double> g(net.num_params()), fd(net.num_params()), theta(net.num_params());
    net_params_grad(net, tape, p, g.data());
    net.get_params(theta.data());
    for (std::size_t k = 0; k < theta.size(); ++k) {
      auto t = theta;
      t[k] += 1e-6;
      net.set_params(t.data());
      const double fp = ad::sum_all(net_forward(net, net_params_const(net), ad::Tensor(x))).v(0, 0);
      t[k] -= 2e-6;
      net.set_params(t.data());
      const double fm = ad::sum_all(net_forward(net, net_params_const(net), ad::Tensor(x))).v(0, 0);
      fd[k] = (fp - fm) / 2e-6;
    }
    net.set_params(theta.data());
    CHECK(oracle::rel_err(g, fd) < 1e-5);
  }
}

TEST_CASE("circular featurizer emits cosine and sine pairs") {
  const Featurizer f{Featurizer::Kind::CircularCosSin, 2};
  Array x(1, 1);
  x << 0.125;
  const auto out = featurize(f, ad::Tensor(x));
  REQUIRE(out.v.cols() == 4);
  CHECK(out.v(0, 0) == doctest::Approx(std::cos(2 * M_PI * 0.125)));
  CHECK(out.v(0, 1) == doctest::Approx(std::sin(2 * M_PI * 0.125)));
  CHECK(out.v(0, 2) == doctest::Approx(std::cos(4 * M_PI * 0.125)));
  CHECK(out.v(0, 3) == doctest::Approx(std::sin(4 * M_PI * 0.125)));
}
