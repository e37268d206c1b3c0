#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smoothflow/training.hpp"

using namespace smoothflow;
using fixture::random_points;
using fixture::small_model;

namespace {

UnitPotential ring_unit() {
  const ToyPotential p = ToyPotential::ring();
  return {p, Compactification::for_potential(p)};
}

// Central differences of a scalar function of the flat parameter vector.
std::vector<double> fd_params(FlowModel m, const std::function<double(const FlowModel&)>& f, double h) {
  const auto p0 = m.get_params();
  std::vector<double> g(p0.size());
  for (std::size_t k = 0; k < p0.size(); ++k) {
    auto p = p0;
    p[k] += h;
    m.set_params(p);
    const double fp = f(m);
    p[k] -= 2 * h;
    m.set_params(p);
    g[k] = (fp - f(m)) / (2 * h);
  }
  return g;
}

// Reverse KL estimate on fixed base draws, recomputed from the sampling map.
double kld_oracle(const FlowModel& m, const UnitPotential& up, const Points& z) {
  const auto fwd = flow_forward(m, z);
  Eigen::ArrayXd u;
  Points f;
  up.eval(fwd.out, u, f);
  return (u - fwd.log_det).mean();
}

Dataset small_dataset(std::uint64_t seed) {
  MHConfig mh;
  mh.chains = 100;
  mh.burn = 100;
  mh.steps = 4;
  return make_dataset(ToyPotential::ring(), mh, seed);
}

}  // namespace

TEST_CASE("energy cutoff") {
  CHECK(lambda_cutoff(500.0) == 500.0);
  CHECK(lambda_cutoff(1e3 + M_E - 1.0) == doctest::Approx(1e3 + 1.0).epsilon(1e-15));
  CHECK(lambda_cutoff(1e3) == 1e3);
  CHECK(lambda_cutoff(std::nextafter(1e3, 2e3)) == doctest::Approx(1e3).epsilon(1e-15));
  // The logarithmic piece is still far below 1e9 here.
  CHECK(lambda_cutoff(1e12) == doctest::Approx(1e3 + std::log(1e12 - 999.0)).epsilon(1e-15));
  CHECK(lambda_cutoff(std::numeric_limits<double>::infinity()) == 1e9);
  double prev = -1e300;
  for (double x = 1.0; x < 1e12; x = x * 1.7 + 3) {
    CHECK(lambda_cutoff(x) >= prev);
    prev = lambda_cutoff(x);
  }
  for (double x : {10.0, 1500.0, 1e5}) {
    const double fd = oracle::richardson([&](double h) { return oracle::central(lambda_cutoff, x, h); }, 1e-3 * x);
    CHECK(oracle::rel_err(lambda_cutoff_slope(x), fd) <= 1e-6);
  }
}

TEST_CASE("first Adam step moves each parameter by lr against the gradient sign") {
  Adam opt(3);
  std::vector<double> p{1.0, 2.0, 3.0};
  opt.step(p, {0.5, -2e-3, 40.0}, 1e-3);
  CHECK(p[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-10));
  CHECK(p[1] == doctest::Approx(2.0 + 1e-3).epsilon(1e-8));
  CHECK(p[2] == doctest::Approx(3.0 - 1e-3).epsilon(1e-10));
  CHECK(opt.steps() == 1);
}

TEST_CASE("Kish efficiency limits") {
  CHECK(kish_efficiency(Eigen::ArrayXd::Constant(50, -3.0)) == doctest::Approx(1.0).epsilon(1e-15));
  Eigen::ArrayXd lw = Eigen::ArrayXd::Constant(50, -1e4);
  lw(7) = 0.0;
  CHECK(kish_efficiency(lw) == doctest::Approx(1.0 / 50).epsilon(1e-12));
  Eigen::ArrayXd two(2);
  two << 0.0, std::log(3.0);  // weights 1 and 3: 16 / (2 * 10)
  CHECK(kish_efficiency(two) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("loss values in closed form") {
  const FlowModel id = identity_model(2, {});
  const Points x = random_points(100, 2, 3);
  CHECK(std::abs(loss_nll(id, x)) < 1e-14);
  CHECK(loss_fm(id, x, Points::Zero(100, 2)) < 1e-20);
  const FlowModel m = small_model(LayerDirection::Forward, 4);
  CHECK(loss_fm(m, x, flow_force(m, x).force) == 0.0);
  CHECK_THROWS_AS(loss_fm(m, x, Points::Zero(99, 2)), std::invalid_argument);
}

TEST_CASE("force-matching value agrees with finite-difference forces") {
  const FlowModel m = small_model(LayerDirection::Forward, 5);
  const Points x = random_points(20, 2, 6, 0.1, 0.9);
  const Points ref = random_points(20, 2, 7, -3.0, 3.0);
  Points fd(20, 2);
  for (int j = 0; j < 2; ++j) {
    const auto g = [&](double h) {
      Points xp = x, xm = x;
      xp.col(j) += h;
      xm.col(j) -= h;
      return Eigen::ArrayXd((log_density(m, xp) - log_density(m, xm)) / (2 * h));
    };
    fd.col(j) = (4.0 * g(5e-6) - g(1e-5)) / 3.0;
  }
  const double oracle_fm = (ref - fd).square().rowwise().sum().mean();
  CHECK(oracle::rel_err(loss_fm(m, x, ref), oracle_fm) <= 1e-6);
}

TEST_CASE("maximum-likelihood gradient matches finite differences") {
  for (auto dir : {LayerDirection::Forward, LayerDirection::Inverse}) {
    const FlowModel m = small_model(dir, 8);
    const Points x = random_points(16, 2, 9);
    TrainConfig cfg;
    const auto lg = loss_and_grad(m, cfg, x, nullptr, nullptr, nullptr);
    CHECK(lg.values.nll == doctest::Approx(loss_nll(m, x)).epsilon(1e-12));
    const auto fd = fd_params(m, [&](const FlowModel& q) { return loss_nll(q, x); }, 1e-6);
    CHECK(oracle::rel_err(lg.grad, fd) <= 1e-4);
  }
}

TEST_CASE("force-matching gradient matches finite differences") {
  for (auto dir : {LayerDirection::Forward, LayerDirection::Inverse}) {
    const FlowModel m = small_model(dir, 10);
    const Points x = random_points(12, 2, 11);
    const Points ref = random_points(12, 2, 12, -2.0, 2.0);
    TrainConfig cfg;
    cfg.omega_n = 0.3;
    cfg.omega_f = 0.7;
    const auto lg = loss_and_grad(m, cfg, x, &ref, nullptr, nullptr);
    CHECK(lg.values.fme == doctest::Approx(loss_fm(m, x, ref)).epsilon(1e-10));
    const auto fd = fd_params(m, [&](const FlowModel& q) { return 0.3 * loss_nll(q, x) + 0.7 * loss_fm(q, x, ref); }, 1e-6);
    CHECK(oracle::rel_err(lg.grad, fd) <= 1e-4);
  }
}

TEST_CASE("reverse KL gradient matches finite differences") {
  const UnitPotential up = ring_unit();
  for (auto dir : {LayerDirection::Forward, LayerDirection::Inverse}) {
    const FlowModel m = small_model(dir, 13);
    const Points x = random_points(8, 2, 14);
    const Points z = random_points(16, 2, 15, 0.0, 1.0);
    TrainConfig cfg;
    cfg.omega_n = 0.0;
    cfg.omega_k = 1.0;
    cfg.kld_cutoff = false;
    const auto lg = loss_and_grad(m, cfg, x, nullptr, &up, &z);
    REQUIRE(lg.values.has_kld);
    CHECK(lg.values.kld == doctest::Approx(kld_oracle(m, up, z)).epsilon(1e-10));
    const auto fd = fd_params(m, [&](const FlowModel& q) { return kld_oracle(q, up, z); }, 1e-6);
    CHECK(oracle::rel_err(lg.grad, fd) <= 1e-3);
  }
}

TEST_CASE("cutoff scales the reverse KL gradient by its slope") {
  const UnitPotential up = ring_unit();
  const FlowModel m = small_model(LayerDirection::Forward, 16);
  const Points x = random_points(8, 2, 17);
  const Points z = random_points(16, 2, 18, 0.0, 1.0);
  TrainConfig cfg;
  cfg.omega_n = 0.0;
  cfg.omega_k = 1.0;
  cfg.kld_cutoff = false;
  const auto raw = loss_and_grad(m, cfg, x, nullptr, &up, &z);
  cfg.kld_cutoff = true;
  const auto cut = loss_and_grad(m, cfg, x, nullptr, &up, &z);
  CHECK(cut.values.total == doctest::Approx(lambda_cutoff(raw.values.kld)).epsilon(1e-14));
  const double s = lambda_cutoff_slope(raw.values.kld);
  for (std::size_t k = 0; k < raw.grad.size(); ++k) CHECK(cut.grad[k] == doctest::Approx(s * raw.grad[k]).epsilon(1e-12));
}

TEST_CASE("identity model against a flat target has zero reverse KL") {
  const ToyPotential flat = ToyPotential::flat(2);
  const UnitPotential up{flat, Compactification::for_potential(flat)};
  CHECK(std::abs(loss_kld(identity_model(2, {}), up, 1000, 3, true)) < 1e-9);
}

TEST_CASE("unit-coordinate potential forces match finite differences") {
  const UnitPotential up = ring_unit();
  const Points x = random_points(20, 2, 19, 0.1, 0.9);
  Eigen::ArrayXd u;
  Points f;
  up.eval(x, u, f);
  for (int j = 0; j < 2; ++j) {
    Points xp = x, xm = x;
    xp.col(j) += 1e-7;
    xm.col(j) -= 1e-7;
    Eigen::ArrayXd up_, um;
    Points ff;
    up.eval(xp, up_, ff);
    up.eval(xm, um, ff);
    const Eigen::ArrayXd fd = -(up_ - um) / 2e-7;
    for (int i = 0; i < 20; ++i) CHECK(oracle::rel_err(f(i, j), fd(i), 1e-3) <= 1e-5);
  }
}

TEST_CASE("training is deterministic and decreases the likelihood loss") {
  const Dataset data = small_dataset(20);
  TrainConfig cfg;
  cfg.iterations = 200;
  cfg.batch_size = 100;
  cfg.lr = 5e-3;
  cfg.eval_every = 50;
  std::string runs[2];
  TrainResult res;
  for (auto& text : runs) {
    FlowModel m = small_model(LayerDirection::Forward, 21);
    std::ostringstream metrics, val;
    res = train(m, data, nullptr, cfg, 22, {&metrics, &val});
    text = metrics.str() + val.str();
  }
  CHECK(runs[0] == runs[1]);
  CHECK(res.best.nll < res.initial.nll - 0.1);

  // 10-iteration block means of the training NLL.
  std::istringstream in(runs[0]);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("iter,nll,fme,kld,grad_norm", 0) == 0);
  std::vector<double> nll;
  while (std::getline(in, line) && static_cast<int>(nll.size()) < cfg.iterations) nll.push_back(std::stod(line.substr(line.find(',') + 1)));
  REQUIRE(nll.size() == 200);
  std::vector<double> block;
  for (int b = 0; b < 20; ++b) {
    double s = 0;
    for (int i = 0; i < 10; ++i) s += nll[static_cast<std::size_t>(10 * b + i)];
    block.push_back(s / 10);
  }
  CHECK(block.back() < block.front());
}

TEST_CASE("non-finite loss aborts with the iteration and term") {
  const Dataset data = small_dataset(23);
  FlowModel m = small_model(LayerDirection::Forward, 24);
  auto p = m.get_params();
  p[p.size() / 2] = std::numeric_limits<double>::quiet_NaN();
  m.set_params(p);
  TrainConfig cfg;
  cfg.iterations = 5;
  cfg.batch_size = 50;
  try {
    train(m, data, nullptr, cfg, 1, {});
    FAIL("expected TrainingAborted");
  } catch (const TrainingAborted& e) {
    CHECK(e.iteration == 0);  // the initial validation pass
    CHECK(e.term == "validation nll");
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.omega_f = -1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.normalized = true;
  cfg.omega_k = 0.3;
  cfg.omega_f = 0.2;
  CHECK(cfg.effective_omega_n() == doctest::Approx(0.5));
  cfg.omega_f = 0.8;
  CHECK_THROWS(cfg.validate());
}
