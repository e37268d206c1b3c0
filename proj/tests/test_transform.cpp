#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "smoothflow/transform.hpp"

using namespace smoothflow;

namespace {

TransformerConfig cfg_of(Domain d, int m, RampSpec r = RampSpec::exponential(1.0, 1.0)) {
  TransformerConfig c;
  c.domain = d;
  c.ramp = r;
  c.components = m;
  return c;
}

// Raw parameters for explicit (a, b) bumps, equal weights and identity weight c.
std::vector<double> raw_of(const TransformerConfig& cfg, const std::vector<BumpParams>& bumps, double c) {
  std::vector<double> raw;
  for (const auto& b : bumps) {
    raw.push_back(a_to_raw(cfg.domain, b.a));
    raw.push_back(b_to_raw(cfg.domain, b.b));
    if (cfg.ramp.trainable_alpha()) raw.push_back(std::log(cfg.ramp.alpha));
  }
  for (std::size_t i = 0; i < bumps.size(); ++i) raw.push_back(0.0);
  raw.push_back(c_to_raw(c));
  return raw;
}

}  // namespace

TEST_CASE("interval bump interpolates the endpoints") {
  const auto r = RampSpec::exponential(1.0, 1.0);
  for (BumpParams p : {BumpParams{0.5, 0.2}, BumpParams{3.0, 0.5}, BumpParams{10.0, 0.9}}) {
    CHECK(std::abs(bump_forward(p, r, 0.0, Domain::Interval).y) < 1e-12);
    CHECK(std::abs(bump_forward(p, r, 1.0, Domain::Interval).y - 1.0) < 1e-12);
  }
  CHECK(bump_forward({1.0, 0.5}, r, 0.5, Domain::Interval).y == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("circle bump equals the integral of its wrapped density") {
  const double a = 2.0, b = 0.95, x = 0.1;
  const auto density = [&](double t) {
    double s = 0;
    for (int k = -1; k <= 1; ++k) s += a * oracle::sigmoid_exp_d1(1.0, a * (t + k - b) + 0.5);
    return s;
  };
  const double expected = oracle::simpson(density, 0.0, x, 4000);
  const double got = bump_forward({a, b}, RampSpec::exponential(1.0, 1.0), x, Domain::Circle).y;
  CHECK(oracle::rel_err(got, expected) < 1e-9);
  CHECK(oracle::rel_err(oracle::simpson(density, 0.0, 1.0, 4000), 1.0) < 1e-9);
}

TEST_CASE("identity mixture is the identity") {
  const auto t = MixtureTransform::identity(cfg_of(Domain::Interval, 5));
  CHECK(t.c() == 1.0);
  for (double x : {0.0, 0.13, 0.5, 0.99, 1.0}) {
    const auto j = t.jet(x);
    CHECK(j.y == doctest::Approx(x).epsilon(1e-15));
    CHECK(j.dy == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(j.g) < 1e-15);
  }
}

TEST_CASE("single component mixture is bump mixed with identity") {
  const auto cfg = cfg_of(Domain::Interval, 1);
  const MixtureTransform t(cfg, raw_of(cfg, {{2.0, 0.4}}, 0.3));
  for (double x : {0.1, 0.4, 0.77}) {
    const double u = bump_forward({2.0, 0.4}, cfg.ramp, x, Domain::Interval).y;
    CHECK(t.value(x) == doctest::Approx(0.7 * u + 0.3 * x).epsilon(1e-12));
  }
}

TEST_CASE("mirrored pair of components fixes the midpoint") {
  const auto cfg = cfg_of(Domain::Interval, 2);
  const MixtureTransform t(cfg, raw_of(cfg, {{3.0, 0.3}, {3.0, 0.7}}, 0.2));
  CHECK(t.value(0.5) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("random mixtures are monotone, interpolate and normalize") {
  std::mt19937_64 rng(11);
  for (Domain d : {Domain::Interval, Domain::Circle}) {
    for (int trial = 0; trial < 40; ++trial) {
      const auto cfg = cfg_of(d, 1 + trial % 6);
      const MixtureTransform t(cfg, random_raw_params(cfg, rng));
      CHECK(std::abs(t.value(0.0)) < 1e-12);
      CHECK(std::abs(t.value(1.0) - 1.0) < 1e-12);
      const int n = 4000;
      std::vector<double> dy(n + 1);
      double min_dy = 1e300;
      for (int i = 0; i <= n; ++i) {
        dy[i] = t.jet(static_cast<double>(i) / n).dy;
        min_dy = std::min(min_dy, dy[i]);
      }
      CHECK(min_dy >= t.c() - 1e-12);
      CHECK(std::abs(oracle::trapezoid(dy, 1.0 / n) - 1.0) < 1e-6);
      if (d == Domain::Circle) {
        const auto j0 = t.jet(0.0), j1 = t.jet(1.0);
        CHECK(std::abs(j0.dy - j1.dy) < 1e-9);
        CHECK(std::abs(j0.d2y - j1.d2y) < 1e-9);
        CHECK(std::abs(j0.d3y - j1.d3y) < 1e-9);
      }
    }
  }
}

TEST_CASE("jet derivatives match finite differences of the value") {
  std::mt19937_64 rng(5);
  for (Domain d : {Domain::Interval, Domain::Circle}) {
    const auto cfg = cfg_of(d, 4);
    const MixtureTransform t(cfg, random_raw_params(cfg, rng));
    for (double x : {0.11, 0.35, 0.62, 0.9}) {
      const auto j = t.jet(x);
      const auto f = [&](double s) { return t.value(s); };
      const auto fdy = [&](double s) { return t.jet(s).dy; };
      const auto fd2 = [&](double s) { return t.jet(s).d2y; };
      CHECK(oracle::rel_err(j.dy, oracle::central(f, x, 1e-6), 1e-6) < 1e-6);
      CHECK(oracle::rel_err(j.d2y, oracle::central(fdy, x, 1e-6), 1e-4) < 1e-5);
      CHECK(oracle::rel_err(j.d3y, oracle::central(fd2, x, 1e-6), 1e-3) < 1e-5);
      CHECK(j.g == doctest::Approx(std::log(j.dy)).epsilon(1e-14));
      CHECK(oracle::rel_err(j.dg, j.d2y / j.dy, 1e-12) < 1e-12);
    }
  }
}

TEST_CASE("parameter jacobian matches finite differences") {
  std::mt19937_64 rng(9);
  for (Domain d : {Domain::Interval, Domain::Circle}) {
    const auto cfg = cfg_of(d, 3);
    MixtureTransform t(cfg, random_raw_params(cfg, rng));
    const auto p0 = t.params();
    for (double x : {0.2, 0.55, 0.8}) {
      const auto J = t.param_jacobian(x);
      REQUIRE(static_cast<std::size_t>(J.dy.size()) == p0.size());
      std::vector<double> fd_y(p0.size()), fd_dy(p0.size()), fd_d2(p0.size()), an_y(p0.size()), an_dy(p0.size()), an_d2(p0.size());
      for (std::size_t k = 0; k < p0.size(); ++k) {
        const double h = 1e-6;
        auto p = p0;
        p[k] += h;
        t.set_params(p);
        const auto jp = t.jet(x);
        p[k] -= 2 * h;
        t.set_params(p);
        const auto jm = t.jet(x);
        t.set_params(p0);
        fd_y[k] = (jp.y - jm.y) / (2 * h);
        fd_dy[k] = (jp.dy - jm.dy) / (2 * h);
        fd_d2[k] = (jp.d2y - jm.d2y) / (2 * h);
        an_y[k] = J.dy(static_cast<Eigen::Index>(k));
        an_dy[k] = J.ddy(static_cast<Eigen::Index>(k));
        an_d2[k] = J.dd2y(static_cast<Eigen::Index>(k));
      }
      CHECK(oracle::rel_err(an_y, fd_y) < 1e-5);
      CHECK(oracle::rel_err(an_dy, fd_dy) < 1e-5);
      CHECK(oracle::rel_err(an_d2, fd_d2) < 1e-5);
    }
  }
}

TEST_CASE("c-direction of the jacobian is x minus the bump mixture") {
  const auto cfg = cfg_of(Domain::Interval, 2);
  const MixtureTransform t(cfg, raw_of(cfg, {{2.0, 0.3}, {1.5, 0.8}}, 0.6));
  const double x = 0.42;
  const double mix = 0.5 * bump_forward({2.0, 0.3}, cfg.ramp, x, Domain::Interval).y +
                     0.5 * bump_forward({1.5, 0.8}, cfg.ramp, x, Domain::Interval).y;
  // c = c_min + (1 - c_min) logistic(raw): dc/draw = (c - c_min)(1 - c) / (1 - c_min).
  const double c = t.c();
  const double dc = (c - kCMin) * (1.0 - c) / (1.0 - kCMin);
  const auto J = t.param_jacobian(x);
  CHECK(oracle::rel_err(J.dy(J.dy.size() - 1) / dc, x - mix) < 1e-10);
}

TEST_CASE("monomial ramps carry no alpha parameters") {
  const auto cfg = cfg_of(Domain::Interval, 3, RampSpec::monomial(2));
  CHECK(cfg.params_per_component() == 2);
  CHECK(cfg.num_params() == 10);
  CHECK(cfg_of(Domain::Interval, 3).num_params() == 13);
}

TEST_CASE("affine transform") {
  CHECK(affine_forward(1.0, 0.0, 0.37).y == 0.37);
  CHECK(affine_forward(2.0, 1.0, 0.5).y == 2.0);
  CHECK(affine_inverse(2.0, 1.0, affine_forward(2.0, 1.0, 0.3).y) == doctest::Approx(0.3).epsilon(1e-15));
  const AffineTransform t(2.0, 0.25);
  CHECK(*t.analytic_inverse(t.value(0.6)) == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("mixture json round trip preserves values") {
  std::mt19937_64 rng(2);
  const auto cfg = cfg_of(Domain::Circle, 3);
  const MixtureTransform t(cfg, random_raw_params(cfg, rng));
  const auto back = MixtureTransform::from_json(t.to_json());
  for (double x : {0.0, 0.3, 0.71}) CHECK(back.value(x) == t.value(x));
}

TEST_CASE("constrained parameter maps round trip") {
  for (double a : {0.2, 1.0, 7.5}) CHECK(a_from_raw(Domain::Interval, a_to_raw(Domain::Interval, a)) == doctest::Approx(a));
  for (double b : {0.01, 0.5, 0.93}) CHECK(b_from_raw(Domain::Circle, b_to_raw(Domain::Circle, b)) == doctest::Approx(b));
  for (double c : {0.01, 0.5, 0.999}) CHECK(c_from_raw(c_to_raw(c)) == doctest::Approx(c));
  CHECK(c_from_raw(-1e3) >= kCMin);
}
