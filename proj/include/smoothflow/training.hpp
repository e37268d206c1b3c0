#pragma once

// Losses, optimizer and the training loop.

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothflow/ad.hpp"
#include "smoothflow/dataset.hpp"
#include "smoothflow/flow.hpp"
#include "smoothflow/potentials.hpp"

namespace smoothflow {

/// Energy cutoff for the reverse KL term: identity up to 1e3, logarithmic
/// growth beyond, and never above 1e9 (which only binds for +inf).
double lambda_cutoff(double x);
double lambda_cutoff_slope(double x);

struct TrainConfig {
  double omega_n = 1.0;
  double omega_k = 0.0;
  double omega_f = 0.0;
  /// When set, omega_n is replaced by 1 - omega_k - omega_f.
  bool normalized = false;
  double lr = 5e-4;
  double lr_decay = 1.0;  // multiplier applied after each pass over the training split
  int batch_size = 1000;
  int iterations = 2000;
  int kld_batch = 0;  // 0: same as batch_size
  bool kld_cutoff = true;
  double val_fraction = 0.1;
  int eval_every = 100;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  void validate() const;
  double effective_omega_n() const { return normalized ? 1.0 - omega_k - omega_f : omega_n; }
};

class Adam {
 public:
  Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
  int steps() const { return t_; }

 private:
  double b1_, b2_, eps_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

/// Toy energy in unit coordinates (the compactification's log-scale is a constant and is dropped).
struct UnitPotential {
  ToyPotential potential;
  Compactification comp;

  void eval(const Points& x_unit, Eigen::ArrayXd& u, Points& force_unit) const;
};

// ---------------------------------------------------------------- plain losses

double loss_nll(const FlowModel& m, const Points& x);
double loss_fm(const FlowModel& m, const Points& x, const Points& ref_force);
/// Monte-Carlo estimate of E_{x ~ p_f}[log p_f(x) + u(x)] on n model samples.
double loss_kld(const FlowModel& m, const UnitPotential& u, int n, std::uint64_t seed, bool cutoff);

/// (sum w)^2 / (n sum w^2) for log-weights.
double kish_efficiency(const Eigen::ArrayXd& log_w);

// ---------------------------------------------------------------- gradients

struct LossValues {
  double nll = 0, fme = 0, kld = 0, total = 0;
  bool has_fme = false, has_kld = false;
};

struct LossGrad {
  LossValues values;
  std::vector<double> grad;  // FlowModel::get_params order
};

/// One weighted loss and its parameter gradient. `z` holds base draws for the
/// KLD term (ignored when omega_k == 0). Forces are needed when omega_f > 0.
LossGrad loss_and_grad(const FlowModel& m, const TrainConfig& cfg, const Points& x, const Points* ref_force,
                       const UnitPotential* target, const Points* z);

// ---------------------------------------------------------------- loop

struct TrainingAborted : std::runtime_error {
  TrainingAborted(const std::string& msg, int it, std::string t) : std::runtime_error(msg), iteration(it), term(std::move(t)) {}
  int iteration;
  std::string term;
};

struct ValidationRow {
  int iter = 0;
  double nll = 0, fme = 0, kld = 0;
  bool has_kld = false;
  double objective = 0;
};

struct TrainResult {
  std::vector<double> best_params;
  ValidationRow best;
  ValidationRow initial;
  ValidationRow last;
};

struct TrainStreams {
  std::ostream* metrics = nullptr;     // iter,nll,fme,kld,grad_norm
  std::ostream* validation = nullptr;  // iter,nll,fme,kld
};

/// Splits the dataset 90/10 (by val_fraction), trains `m` in place and returns
/// the best-validation parameters. `target` enables the KLD term.
TrainResult train(FlowModel& m, const Dataset& data, const UnitPotential* target, const TrainConfig& cfg, std::uint64_t seed,
                  const TrainStreams& out);

/// Deterministic permutation used for the split.
std::vector<Eigen::Index> split_permutation(std::size_t n, std::uint64_t seed);

Points take_rows(const Points& a, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end);

}  // namespace smoothflow
