#pragma once

// Vectorized multi-bin bisection for batches of increasing scalar maps.
//
// Each sweep evaluates K - 1 interior grid points of every active bracket in
// a single batched call and keeps the bin whose right edge first overshoots
// the target. The bracket therefore shrinks by exactly K per sweep.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothflow/transform.hpp"

namespace smoothflow {

struct RootFindConfig {
  int bins = 16;
  double eps = 1e-10;  // absolute tolerance on |f(x) - y|
  int max_iter = 200;
  double lo = 0.0;
  double hi = 1.0;
  /// Optional width criterion relative to hi - lo; 0 disables it.
  double x_tol = 0.0;

  void validate() const;
};

/// Slack allowed when checking that targets lie inside [f(lo), f(hi)].
inline constexpr double kBracketSlack = 1e-9;

class BatchedMonotoneMap {
 public:
  virtual ~BatchedMonotoneMap() = default;
  virtual std::size_t size() const = 0;
  /// out[j] = f_elem[j](x[j]); one call per sweep.
  virtual void evaluate(const std::vector<std::size_t>& elem, const std::vector<double>& x, std::vector<double>& out) const = 0;
};

/// Every element uses its own ScalarBijection (pointers must outlive the map).
class ScalarMapBatch final : public BatchedMonotoneMap {
 public:
  explicit ScalarMapBatch(std::vector<const ScalarBijection*> maps) : maps_(std::move(maps)) {}
  std::size_t size() const override { return maps_.size(); }
  void evaluate(const std::vector<std::size_t>& elem, const std::vector<double>& x, std::vector<double>& out) const override;

 private:
  std::vector<const ScalarBijection*> maps_;
};

struct TargetOutOfBracket : std::runtime_error {
  TargetOutOfBracket(const std::string& msg, std::vector<std::size_t> idx) : std::runtime_error(msg), indices(std::move(idx)) {}
  std::vector<std::size_t> indices;
};

struct NotConverged : std::runtime_error {
  NotConverged(const std::string& msg, std::vector<std::size_t> idx, std::vector<double> best, std::vector<double> res)
      : std::runtime_error(msg), indices(std::move(idx)), best_x(std::move(best)), residual(std::move(res)) {}
  std::vector<std::size_t> indices;
  std::vector<double> best_x;
  std::vector<double> residual;
};

struct RootFindResult {
  std::vector<double> x;
  std::vector<double> residual;  // |f(x) - y|
  std::vector<int> iterations;   // sweeps in which each element was active
  int sweeps = 0;                // vectorized sweeps for the whole batch
};

/// Step-by-step driver; multibin_invert runs it to completion.
class MultiBinSearch {
 public:
  MultiBinSearch(const BatchedMonotoneMap& f, std::vector<double> y, RootFindConfig cfg);

  bool done() const { return active_.empty(); }
  /// One vectorized sweep over all unfinished elements.
  void step();
  int sweeps() const { return sweeps_; }

  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  bool finished(std::size_t i) const { return finished_[i] != 0; }

  /// Throws NotConverged if some element did not meet the tolerance.
  RootFindResult result() const;

 private:
  void finish(std::size_t i, double x, double residual);

  const BatchedMonotoneMap& f_;
  std::vector<double> y_;
  RootFindConfig cfg_;
  std::vector<double> lo_, hi_, flo_, fhi_;
  std::vector<double> x_, res_;
  std::vector<int> iters_;
  std::vector<char> finished_, failed_;
  std::vector<std::size_t> active_;
  int sweeps_ = 0;
};

RootFindResult multibin_invert(const BatchedMonotoneMap& f, const std::vector<double>& y, const RootFindConfig& cfg);

/// ceil(log_K(width / eps)): sweeps needed on the identity map.
int expected_identity_sweeps(int bins, double width, double eps);

struct BenchRow {
  int dim = 0;
  int bins = 0;
  int batch = 0;
  double mean_iters = 0;
  double mean_ms = 0;
  double std_ms = 0;
};

/// Inverts `dim` random mixture transforms on `batch` targets each, `reps`
/// times per K. Wall-clock columns are informative only.
std::vector<BenchRow> bench_rootfind(int dim, const std::vector<int>& bins, int batch, int reps, double eps, std::uint64_t seed,
                                     bool timing);

std::string bench_csv(const std::vector<BenchRow>& rows, bool timing);

}  // namespace smoothflow
