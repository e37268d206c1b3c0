#pragma once

// Small models and point sets shared by the flow and training tests.

#include <cstdint>
#include <random>
#include <vector>

#include "smoothflow/flow.hpp"

namespace fixture {

using namespace smoothflow;

inline FlowModel small_model(LayerDirection dir, std::uint64_t seed, int dims = 2, std::vector<Domain> domains = {}, int layers = 2) {
  ModelConfig mc;
  mc.dims = dims;
  mc.domains = std::move(domains);
  mc.layers = layers;
  mc.components = 4;
  mc.hidden = {8};
  mc.direction = dir;
  RootFindConfig rf;
  rf.eps = 1e-14;
  FlowModel m = build_model(mc, rf, seed);
  // Move away from the initialization so every parameter path is active.
  std::mt19937_64 rng(seed + 100);
  std::normal_distribution<double> nd(0.0, 0.3);
  auto p = m.get_params();
  for (auto& v : p) v += nd(rng);
  m.set_params(p);
  return m;
}

inline Points random_points(int n, int d, std::uint64_t seed, double lo = 0.05, double hi = 0.95) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Points x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  return x;
}

}  // namespace fixture
