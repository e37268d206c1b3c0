#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "smoothflow/ramp.hpp"

using namespace smoothflow;

TEST_CASE("monomial ramp is x^k with exact derivatives") {
  const auto j = ramp_eval(RampSpec::monomial(1), 0.3);
  CHECK(j.v == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(j.d1 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(j.d2 == 0.0);
  CHECK(j.d3 == 0.0);
  const auto c = ramp_eval(RampSpec::monomial(3), 0.5);
  CHECK(c.v == doctest::Approx(0.125));
  CHECK(c.d1 == doctest::Approx(0.75));
  CHECK(c.d2 == doctest::Approx(3.0));
  CHECK(c.d3 == doctest::Approx(6.0));
}

TEST_CASE("exponential ramp vanishes with all derivatives for x <= 0") {
  const auto spec = RampSpec::exponential(1.0, 1.0);
  for (double x : {0.0, -1e-9, -0.5, -3.0}) {
    const auto j = ramp_eval(spec, x);
    CHECK(j.v == 0.0);
    CHECK(j.d1 == 0.0);
    CHECK(j.d2 == 0.0);
    CHECK(j.d3 == 0.0);
  }
}

TEST_CASE("exponential ramp alpha=1 beta=2 at 0.5 has slope 16 e^-4") {
  const auto j = ramp_eval(RampSpec::exponential(1.0, 2.0), 0.5);
  CHECK(j.v == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(j.d1 == doctest::Approx(16.0 * std::exp(-4.0)).epsilon(1e-14));
  const auto f = [](double x) { return oracle::rho_exp(1.0, 2.0, x); };
  CHECK(oracle::rel_err(j.d1, oracle::central(f, 0.5, 1e-6)) < 1e-8);
}

TEST_CASE("exponential ramp derivatives match finite differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ua(0.3, 3.0), ub(1.0, 3.0), ux(0.15, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = ua(rng), beta = ub(rng), x = ux(rng);
    const auto spec = RampSpec::exponential(alpha, beta);
    const auto j = ramp_eval(spec, x);
    const auto f = [&](double t) { return oracle::rho_exp(alpha, beta, t); };
    const auto d1 = [&](double t) { return ramp_eval(spec, t).d1; };
    const auto d2 = [&](double t) { return ramp_eval(spec, t).d2; };
    CHECK(j.v == doctest::Approx(f(x)).epsilon(1e-14));
    CHECK(oracle::rel_err(j.d1, oracle::central(f, x, 1e-5), 1e-8) < 1e-6);
    CHECK(oracle::rel_err(j.d2, oracle::central(d1, x, 1e-5), 1e-8) < 1e-6);
    CHECK(oracle::rel_err(j.d3, oracle::central(d2, x, 1e-5), 1e-8) < 1e-6);
  }
}

TEST_CASE("ramp validation rejects bad hyperparameters") {
  CHECK_THROWS_AS(RampSpec::monomial(0), std::invalid_argument);
  CHECK_THROWS_AS(RampSpec::exponential(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(RampSpec::exponential(1.0, 0.5), std::invalid_argument);
  CHECK(RampSpec::exponential(1.0, 1.0).smoothness() == -1);
  CHECK(RampSpec::monomial(3).smoothness() == 2);
}

TEST_CASE("sigmoid basic values") {
  for (const auto& spec : {RampSpec::monomial(1), RampSpec::monomial(4), RampSpec::exponential(1.0, 1.0),
                           RampSpec::exponential(0.7, 2.0)}) {
    CHECK(sigmoid_eval(spec, 0.5).v == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sigmoid_eval(spec, 0.0).v == 0.0);
    CHECK(sigmoid_eval(spec, 1.0).v == 1.0);
  }
  CHECK(sigmoid_eval(RampSpec::monomial(1), 0.3).v == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("sigmoid alpha=1 beta=2 at 0.25 matches the direct quotient") {
  const double r1 = std::exp(-16.0), r2 = std::exp(-1.0 / 0.5625);
  const double expected = r1 / (r1 + r2);
  CHECK(oracle::rel_err(sigmoid_eval(RampSpec::exponential(1.0, 2.0), 0.25).v, expected) < 1e-13);
}

TEST_CASE("sigmoid is symmetric and its derivatives match finite differences") {
  const auto spec = RampSpec::exponential(1.3, 1.0);
  for (double x = 0.02; x < 1.0; x += 0.037) {
    const auto j = sigmoid_eval(spec, x);
    CHECK(std::abs(j.v + sigmoid_eval(spec, 1.0 - x).v - 1.0) < 1e-12);
    CHECK(oracle::rel_err(j.d1, oracle::sigmoid_exp_d1(1.3, x), 1e-12) < 1e-10);
    const auto d1 = [&](double t) { return sigmoid_eval(spec, t).d1; };
    const auto d2 = [&](double t) { return sigmoid_eval(spec, t).d2; };
    CHECK(oracle::rel_err(j.d2, oracle::central(d1, x, 1e-5), 1e-6) < 1e-5);
    CHECK(oracle::rel_err(j.d3, oracle::central(d2, x, 1e-5), 1e-4) < 1e-5);
  }
}

TEST_CASE("exponential sigmoid is flat at both ends") {
  const auto spec = RampSpec::exponential(1.0, 2.0);
  for (double x : {1e-4, 1.0 - 1e-4, 1e-3}) {
    const auto j = sigmoid_eval(spec, x);
    CHECK(std::abs(j.d1) <= 1e-6);
    CHECK(std::abs(j.d2) <= 1e-6);
    CHECK(std::abs(j.d3) <= 1e-6);
  }
}

TEST_CASE("sigmoid survives extreme ramp ratios") {
  const auto spec = RampSpec::exponential(0.01, 3.0);
  for (double x : {1e-6, 0.01, 0.2, 0.8, 0.99, 1.0 - 1e-6}) {
    const auto j = sigmoid_eval(spec, x);
    CHECK(std::isfinite(j.v));
    CHECK(std::isfinite(j.d1));
    CHECK(std::isfinite(j.d3));
    CHECK(j.v >= 0.0);
    CHECK(j.v <= 1.0);
  }
}

TEST_CASE("ramp kind names round trip") {
  CHECK(ramp_kind_from_string(to_string(RampKind::Exponential)) == RampKind::Exponential);
  CHECK(ramp_kind_from_string(to_string(RampKind::Monomial)) == RampKind::Monomial);
  CHECK_THROWS(ramp_kind_from_string("cubic"));
}
