#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "smoothflow/implicit.hpp"

using namespace smoothflow;

namespace {

TransformerConfig mix_cfg(Domain d = Domain::Interval, int m = 4) {
  TransformerConfig c;
  c.domain = d;
  c.components = m;
  return c;
}

RootFindConfig tight() {
  RootFindConfig rf;
  rf.eps = 1e-15;
  rf.bins = 16;
  return rf;
}

// Reference inverse by plain bisection.
double beta(const ScalarBijection& t, double y) {
  return oracle::bisect([&](double x) { return t.value(x); }, y);
}

}  // namespace

TEST_CASE("identity and affine inverses") {
  const auto id = MixtureTransform::identity(mix_cfg());
  const auto r = inverse_forward(id, {0.2, 0.7}, RootFindConfig{});
  CHECK(std::abs(r.x[0] - 0.2) <= 1e-10);
  CHECK(std::abs(r.neg_log_jac[1]) < 1e-14);
  const AffineTransform a(2.0, -0.5);
  const auto ra = inverse_forward(a, {0.3, 1.1}, tight());
  CHECK(ra.x[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(ra.neg_log_jac[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("mixture inverse satisfies the forward map") {
  std::mt19937_64 rng(8);
  const auto cfg = mix_cfg();
  const MixtureTransform t(cfg, random_raw_params(cfg, rng));
  const auto r = inverse_forward(t, {0.05, 0.5, 0.93}, RootFindConfig{});
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(t.value(r.x[i]) - std::vector<double>{0.05, 0.5, 0.93}[i]) <= 1e-9);
}

TEST_CASE("input gradient: affine slope and zero seeds") {
  const AffineTransform a(2.0, 0.0);
  const auto r = inverse_forward(a, {0.6}, tight());
  CHECK(backward_input(r.record, {1.0}, {0.0})[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(backward_input(r.record, {0.0}, {0.0})[0] == 0.0);
  CHECK(backward_params(r.record, {0.0}, {0.0}).norm() == 0.0);
}

TEST_CASE("affine parameter gradient of the shift is -1/scale") {
  const AffineTransform a(2.0, 0.3);
  const auto r = inverse_forward(a, {0.9}, tight());
  const auto g = backward_params(r.record, {1.0}, {0.0});
  CHECK(g(1) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("input gradient matches finite differences") {
  std::mt19937_64 rng(12);
  for (Domain d : {Domain::Interval, Domain::Circle}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto cfg = mix_cfg(d);
      const MixtureTransform t(cfg, random_raw_params(cfg, rng));
      const double y = 0.1 + 0.08 * trial;
      const auto r = inverse_forward(t, {y}, tight());
      const double h = 1e-6;
      const double fd_x = (beta(t, y + h) - beta(t, y - h)) / (2 * h);
      const auto nlj = [&](double s) { return -t.jet(beta(t, s)).g; };
      const double fd_l = (nlj(y + h) - nlj(y - h)) / (2 * h);
      CHECK(oracle::rel_err(backward_input(r.record, {1.0}, {0.0})[0], fd_x) <= 1e-5);
      CHECK(oracle::rel_err(backward_input(r.record, {0.0}, {1.0})[0], fd_l, 1e-6) <= 1e-5);
    }
  }
}

TEST_CASE("parameter gradient matches finite differences") {
  std::mt19937_64 rng(13);
  const auto cfg = mix_cfg(Domain::Interval, 3);
  MixtureTransform t(cfg, random_raw_params(cfg, rng));
  const std::vector<double> ys{0.15, 0.4, 0.66, 0.9};
  const auto r = inverse_forward(t, ys, tight());
  const auto g = backward_params(r.record, std::vector<double>(ys.size(), 1.0), std::vector<double>(ys.size(), 1.0));
  const auto loss = [&](const std::vector<double>& p) {
    MixtureTransform u(cfg, p);
    double s = 0;
    for (double y : ys) {
      const double x = beta(u, y);
      s += x - u.jet(x).g;
    }
    return s;
  };
  const auto p0 = t.params();
  std::vector<double> fd(p0.size()), an(p0.size());
  for (std::size_t k = 0; k < p0.size(); ++k) {
    auto p = p0;
    const double h = 1e-6;
    p[k] += h;
    const double lp = loss(p);
    p[k] -= 2 * h;
    fd[k] = (lp - loss(p)) / (2 * h);
    an[k] = g(static_cast<Eigen::Index>(k));
  }
  CHECK(oracle::rel_err(an, fd) <= 1e-4);
}

TEST_CASE("higher inverse derivatives vanish for affine maps") {
  const AffineTransform a(1.7, 0.1);
  const auto r = inverse_forward(a, {0.5, 0.9}, tight());
  for (double v : inverse_second_derivative(r.record)) CHECK(v == 0.0);
  for (double v : inverse_third_derivative(r.record)) CHECK(v == 0.0);
  CHECK(inverse_mixed_second_param(r.record).norm() == 0.0);
  const auto id = MixtureTransform::identity(mix_cfg());
  const auto ri = inverse_forward(id, {0.3}, tight());
  CHECK(std::abs(inverse_second_derivative(ri.record)[0]) < 1e-14);
  CHECK(std::abs(inverse_third_derivative(ri.record)[0]) < 1e-14);
}

TEST_CASE("second and third inverse derivatives match finite differences") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 8; ++trial) {
    const auto cfg = mix_cfg(trial % 2 ? Domain::Circle : Domain::Interval, 3);
    const MixtureTransform t(cfg, random_raw_params(cfg, rng));
    const double y = 0.2 + 0.07 * trial;
    const auto r = inverse_forward(t, {y}, tight());
    const auto b = [&](double s) { return beta(t, s); };
    const double d2 = inverse_second_derivative(r.record)[0];
    const double d3 = inverse_third_derivative(r.record)[0];
    const double fd2 = oracle::richardson([&](double h) { return oracle::central2(b, y, h); }, 1e-3);
    const double fd3 = oracle::richardson([&](double h) { return oracle::central3(b, y, h); }, 4e-3);
    CHECK(oracle::rel_err(d2, fd2, 1e-3) <= 1e-3);
    CHECK(oracle::rel_err(d3, fd3, 1e-2) <= 1e-2);
  }
}

TEST_CASE("mixed parameter derivative matches finite differences") {
  std::mt19937_64 rng(41);
  const auto cfg = mix_cfg(Domain::Interval, 2);
  const MixtureTransform t(cfg, random_raw_params(cfg, rng));
  const double y = 0.45;
  const auto r = inverse_forward(t, {y}, tight());
  const Eigen::MatrixXd m = inverse_mixed_second_param(r.record);
  const auto p0 = t.params();
  std::vector<double> fd(p0.size()), an(p0.size());
  for (std::size_t k = 0; k < p0.size(); ++k) {
    const double h = 1e-5;
    auto p = p0;
    p[k] += h;
    const MixtureTransform tp(cfg, p);
    const double up = inverse_second_derivative(inverse_forward(tp, {y}, tight()).record)[0];
    p[k] -= 2 * h;
    const MixtureTransform tm(cfg, p);
    const double um = inverse_second_derivative(inverse_forward(tm, {y}, tight()).record)[0];
    fd[k] = (up - um) / (2 * h);
    an[k] = m(0, static_cast<Eigen::Index>(k));
  }
  CHECK(oracle::rel_err(an, fd) <= 1e-2);
}
