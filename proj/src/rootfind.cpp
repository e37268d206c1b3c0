#include "smoothflow/rootfind.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <random>
#include <sstream>

namespace smoothflow {

void RootFindConfig::validate() const {
  if (bins < 2) throw std::invalid_argument("rootfind: bins must be >= 2");
  if (!(eps > 0)) throw std::invalid_argument("rootfind: eps must be > 0");
  if (max_iter < 1) throw std::invalid_argument("rootfind: max_iter must be >= 1");
  if (!(lo < hi)) throw std::invalid_argument("rootfind: bracket must satisfy lo < hi");
  if (x_tol < 0) throw std::invalid_argument("rootfind: x_tol must be >= 0");
}

void ScalarMapBatch::evaluate(const std::vector<std::size_t>& elem, const std::vector<double>& x, std::vector<double>& out) const {
  out.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = maps_[elem[j]]->value(x[j]);
}

MultiBinSearch::MultiBinSearch(const BatchedMonotoneMap& f, std::vector<double> y, RootFindConfig cfg)
    : f_(f), y_(std::move(y)), cfg_(cfg) {
  cfg_.validate();
  const std::size_t n = y_.size();
  if (n != f_.size()) throw std::invalid_argument("rootfind: target count does not match the batch");
  lo_.assign(n, cfg_.lo);
  hi_.assign(n, cfg_.hi);
  x_.assign(n, 0.0);
  res_.assign(n, 0.0);
  iters_.assign(n, 0);
  finished_.assign(n, 0);
  failed_.assign(n, 0);

  std::vector<std::size_t> elem(2 * n);
  std::vector<double> pts(2 * n), vals;
  for (std::size_t i = 0; i < n; ++i) {
    elem[2 * i] = elem[2 * i + 1] = i;
    pts[2 * i] = cfg_.lo;
    pts[2 * i + 1] = cfg_.hi;
  }
  f_.evaluate(elem, pts, vals);
  flo_.resize(n);
  fhi_.resize(n);
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < n; ++i) {
    flo_[i] = vals[2 * i];
    fhi_[i] = vals[2 * i + 1];
    if (!(y_[i] >= flo_[i] - kBracketSlack && y_[i] <= fhi_[i] + kBracketSlack)) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "rootfind: " << bad.size() << " target(s) outside [f(lo), f(hi)], first at index " << bad[0] << " (y = " << y_[bad[0]]
        << ", range [" << flo_[bad[0]] << ", " << fhi_[bad[0]] << "])";
    throw TargetOutOfBracket(msg.str(), std::move(bad));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double rl = std::abs(flo_[i] - y_[i]);
    const double rh = std::abs(fhi_[i] - y_[i]);
    if (flo_[i] == y_[i] || rl <= cfg_.eps)
      finish(i, cfg_.lo, rl);
    else if (fhi_[i] == y_[i] || rh <= cfg_.eps)
      finish(i, cfg_.hi, rh);
    else
      active_.push_back(i);
  }
}

void MultiBinSearch::finish(std::size_t i, double x, double residual) {
  x_[i] = x;
  res_[i] = residual;
  finished_[i] = 1;
}

void MultiBinSearch::step() {
  if (done()) return;
  const int k_bins = cfg_.bins;
  const std::size_t inner = static_cast<std::size_t>(k_bins - 1);
  std::vector<std::size_t> elem;
  std::vector<double> pts, vals;
  elem.reserve(active_.size() * inner);
  pts.reserve(active_.size() * inner);
  for (std::size_t i : active_) {
    const double w = hi_[i] - lo_[i];
    for (int k = 1; k < k_bins; ++k) {
      elem.push_back(i);
      pts.push_back(lo_[i] + w * static_cast<double>(k) / static_cast<double>(k_bins));
    }
  }
  f_.evaluate(elem, pts, vals);
  ++sweeps_;

  std::vector<std::size_t> still;
  std::vector<std::size_t> need_mid;
  std::vector<double> grid(static_cast<std::size_t>(k_bins + 1)), fg(static_cast<std::size_t>(k_bins + 1));
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const std::size_t i = active_[a];
    ++iters_[i];
    grid[0] = lo_[i];
    fg[0] = flo_[i];
    grid[static_cast<std::size_t>(k_bins)] = hi_[i];
    fg[static_cast<std::size_t>(k_bins)] = fhi_[i];
    for (std::size_t k = 1; k <= inner; ++k) {
      grid[k] = pts[a * inner + k - 1];
      fg[k] = vals[a * inner + k - 1];
    }
    int kk = k_bins - 1;
    for (int k = 0; k < k_bins; ++k)
      if (fg[static_cast<std::size_t>(k + 1)] - y_[i] > 0) {
        kk = k;
        break;
      }
    const auto k0 = static_cast<std::size_t>(kk);
    const bool splittable = grid[1] > grid[0] && grid[inner] < grid[static_cast<std::size_t>(k_bins)];
    lo_[i] = grid[k0];
    hi_[i] = grid[k0 + 1];
    flo_[i] = fg[k0];
    fhi_[i] = fg[k0 + 1];

    std::size_t hit = grid.size();
    for (std::size_t k = 0; k < grid.size(); ++k)
      if (fg[k] - y_[i] == 0) {
        hit = k;
        break;
      }
    const double rl = std::abs(flo_[i] - y_[i]);
    const double rh = std::abs(fhi_[i] - y_[i]);
    if (hit < grid.size()) {
      finish(i, grid[hit], 0.0);
    } else if (rl <= cfg_.eps) {
      finish(i, lo_[i], rl);
    } else if (rh <= cfg_.eps) {
      finish(i, hi_[i], rh);
    } else if (cfg_.x_tol > 0 && hi_[i] - lo_[i] <= cfg_.x_tol * (cfg_.hi - cfg_.lo)) {
      need_mid.push_back(i);
    } else if (!splittable || iters_[i] >= cfg_.max_iter) {
      // Floating-point resolution or the sweep cap reached: keep the better end.
      finish(i, rl <= rh ? lo_[i] : hi_[i], std::min(rl, rh));
      failed_[i] = 1;
    } else {
      still.push_back(i);
    }
  }
  if (!need_mid.empty()) {
    std::vector<double> mid;
    for (std::size_t i : need_mid) mid.push_back(0.5 * (lo_[i] + hi_[i]));
    std::vector<double> fm;
    f_.evaluate(need_mid, mid, fm);
    for (std::size_t j = 0; j < need_mid.size(); ++j) finish(need_mid[j], mid[j], std::abs(fm[j] - y_[need_mid[j]]));
  }
  active_ = std::move(still);
}

RootFindResult MultiBinSearch::result() const {
  if (!done()) throw std::logic_error("rootfind: result requested before convergence");
  std::vector<std::size_t> bad;
  std::vector<double> bx, br;
  for (std::size_t i = 0; i < y_.size(); ++i)
    if (failed_[i] && res_[i] > cfg_.eps) {
      bad.push_back(i);
      bx.push_back(x_[i]);
      br.push_back(res_[i]);
    }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "rootfind: " << bad.size() << " element(s) did not reach eps = " << cfg_.eps << "; first index " << bad[0]
        << " has residual " << br[0] << " at x = " << bx[0];
    throw NotConverged(msg.str(), std::move(bad), std::move(bx), std::move(br));
  }
  return RootFindResult{x_, res_, iters_, sweeps_};
}

RootFindResult multibin_invert(const BatchedMonotoneMap& f, const std::vector<double>& y, const RootFindConfig& cfg) {
  MultiBinSearch search(f, y, cfg);
  while (!search.done()) search.step();
  return search.result();
}

int expected_identity_sweeps(int bins, double width, double eps) {
  // Integer search avoids log rounding at exact powers.
  int n = 0;
  double w = width;
  while (w > eps) {
    w /= bins;
    ++n;
  }
  return n;
}

std::vector<BenchRow> bench_rootfind(int dim, const std::vector<int>& bins, int batch, int reps, double eps, std::uint64_t seed,
                                     bool timing) {
  if (dim < 1 || batch < 1 || reps < 1 || bins.empty()) throw std::invalid_argument("bench: sizes must be positive");
  std::vector<BenchRow> rows;
  for (int k : bins) {
    std::mt19937_64 rng(seed);
    double iters = 0;
    std::vector<double> ms;
    for (int r = 0; r < reps; ++r) {
      TransformerConfig tc;
      tc.components = 8;
      std::vector<std::unique_ptr<MixtureTransform>> ts;
      for (int d = 0; d < dim; ++d) ts.push_back(std::make_unique<MixtureTransform>(tc, random_raw_params(tc, rng)));
      std::vector<const ScalarBijection*> maps;
      std::vector<double> y;
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int d = 0; d < dim; ++d)
        for (int b = 0; b < batch; ++b) {
          maps.push_back(ts[static_cast<std::size_t>(d)].get());
          y.push_back(u(rng));
        }
      ScalarMapBatch f(std::move(maps));
      RootFindConfig cfg;
      cfg.bins = k;
      cfg.eps = eps;
      const auto t0 = std::chrono::steady_clock::now();
      const auto res = multibin_invert(f, y, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      iters += res.sweeps;
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    BenchRow row;
    row.dim = dim;
    row.bins = k;
    row.batch = batch;
    row.mean_iters = iters / reps;
    if (timing) {
      double m = 0;
      for (double v : ms) m += v;
      m /= reps;
      double s = 0;
      for (double v : ms) s += (v - m) * (v - m);
      row.mean_ms = m;
      row.std_ms = reps > 1 ? std::sqrt(s / (reps - 1)) : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows, bool timing) {
  std::string out = "dim,K,batch,mean_iters,mean_ms,std_ms\n";
  char buf[256];
  for (const auto& r : rows) {
    if (timing)
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g\n", r.dim, r.bins, r.batch, r.mean_iters, r.mean_ms, r.std_ms);
    else
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,NA,NA\n", r.dim, r.bins, r.batch, r.mean_iters);
    out += buf;
  }
  return out;
}

}  // namespace smoothflow
