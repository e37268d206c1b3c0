#include "smoothflow/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "smoothflow/errors.hpp"

namespace smoothflow {

using ad::Array;
using ad::Var;

double lambda_cutoff(double x) {
  if (std::isnan(x)) return x;
  if (x <= 1e3) return x;
  return std::min(1e3 + std::log1p(x - 1e3), 1e9);
}

double lambda_cutoff_slope(double x) {
  if (x <= 1e3) return 1.0;
  const double v = 1e3 + std::log1p(x - 1e3);
  return v >= 1e9 ? 0.0 : 1.0 / (1.0 + (x - 1e3));
}

void TrainConfig::validate() const {
  if (omega_n < 0 || omega_k < 0 || omega_f < 0) throw ConfigError("train: loss weights must be >= 0");
  if (normalized && omega_k + omega_f > 1.0) throw ConfigError("train: omega_k + omega_f must be <= 1 in normalized mode");
  if (effective_omega_n() + omega_k + omega_f <= 0) throw ConfigError("train: all loss weights are zero");
  if (!(lr > 0) || !(lr_decay > 0)) throw ConfigError("train: lr and lr_decay must be > 0");
  if (batch_size < 1 || iterations < 0 || kld_batch < 0) throw ConfigError("train: batch sizes must be >= 1, iterations >= 0");
  if (!(val_fraction > 0 && val_fraction < 1)) throw ConfigError("train.val_fraction must lie in (0, 1)");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && adam_eps > 0)) throw ConfigError("train: invalid Adam hyperparameters");
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps) : b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, t_);
  const double c2 = 1.0 - std::pow(b2_, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void UnitPotential::eval(const Points& x_unit, Eigen::ArrayXd& u, Points& force_unit) const {
  Points native(x_unit.rows(), x_unit.cols());
  for (int d = 0; d < comp.dims(); ++d)
    for (Eigen::Index i = 0; i < x_unit.rows(); ++i) native(i, d) = comp.to_native(d, x_unit(i, d));
  Points f;
  potential.eval(native, u, f);
  force_unit.resize(f.rows(), f.cols());
  for (int d = 0; d < comp.dims(); ++d) force_unit.col(d) = f.col(d) / comp.scale(d);
}

double loss_nll(const FlowModel& m, const Points& x) { return -log_density(m, x).mean(); }

double loss_fm(const FlowModel& m, const Points& x, const Points& ref_force) {
  if (ref_force.rows() != x.rows() || ref_force.cols() != x.cols()) throw std::invalid_argument("loss_fm: force shape mismatch");
  const ForceResult r = flow_force(m, x);
  return (ref_force - r.force).square().rowwise().sum().mean();
}

double loss_kld(const FlowModel& m, const UnitPotential& up, int n, std::uint64_t seed, bool cutoff) {
  const SampleResult s = sample(m, n, seed);
  Eigen::ArrayXd u;
  Points f;
  up.eval(s.x, u, f);
  const double k = (s.log_p + u).mean();
  return cutoff ? lambda_cutoff(k) : k;
}

double kish_efficiency(const Eigen::ArrayXd& log_w) {
  if (log_w.size() == 0) throw std::invalid_argument("kish_efficiency: empty weights");
  const double mx = log_w.maxCoeff();
  if (!std::isfinite(mx)) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::ArrayXd w = (log_w - mx).exp();
  return w.sum() * w.sum() / (static_cast<double>(w.size()) * w.square().sum());
}

namespace {

std::vector<Var> constant_columns(ad::Tape& tape, const Points& x) {
  std::vector<Var> col;
  for (Eigen::Index c = 0; c < x.cols(); ++c) col.push_back(tape.constant(Array(x.col(c))));
  return col;
}

// u(x) in unit coordinates, differentiable in x through the analytic force.
Var potential_var(const UnitPotential& up, const std::vector<Var>& col) {
  ad::Tape& tape = *col[0].tape;
  Points x(ad::value(col[0]).rows(), static_cast<Eigen::Index>(col.size()));
  std::vector<int> ids;
  bool rg = false;
  for (std::size_t c = 0; c < col.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = ad::value(col[c]).col(0);
    ids.push_back(col[c].id);
    rg = rg || ad::requires_grad(col[c]);
  }
  Eigen::ArrayXd u;
  Points f;
  up.eval(x, u, f);
  return tape.push(Array(u), rg, [ids, f = std::move(f)](ad::Tape& tp, const Array& g) {
    for (std::size_t c = 0; c < ids.size(); ++c) tp.accumulate(ids[c], Array(-(g.col(0) * f.col(static_cast<Eigen::Index>(c)))));
  });
}

Var lambda_var(const Var& k) {
  const double v = ad::value(k)(0, 0);
  const int id = k.id;
  return k.tape->push(Array::Constant(1, 1, lambda_cutoff(v)), ad::requires_grad(k),
                      [id, s = lambda_cutoff_slope(v)](ad::Tape& tp, const Array& g) { tp.accumulate(id, Array(g * s)); });
}

}  // namespace

LossGrad loss_and_grad(const FlowModel& m, const TrainConfig& cfg, const Points& x, const Points* ref_force, const UnitPotential* target,
                       const Points* z) {
  ad::Tape tape;
  const auto params = model_params_leaves(m, tape);
  const double wn = cfg.effective_omega_n();
  LossGrad out;
  Var total;
  if (cfg.omega_f > 0) {
    if (!ref_force) throw std::invalid_argument("loss_and_grad: force matching needs reference forces");
    using D = ad::Dual<Var>;
    const auto nd = static_cast<std::size_t>(m.dims);
    std::vector<D> col;
    const auto xc = constant_columns(tape, x);
    for (std::size_t c = 0; c < nd; ++c) col.push_back(ad::seed(xc[c], c, nd));
    const D ld = density_pass(m, params, col);
    const Var nll = -ad::mean_all(ld.v);
    Var sq;
    for (std::size_t c = 0; c < nd; ++c) {
      const Var ref = tape.constant(Array(ref_force->col(static_cast<Eigen::Index>(c))));
      const Var diff = ld.tangent(c) ? ref - *ld.tangent(c) : ref;
      sq = c == 0 ? ad::square(diff) : sq + ad::square(diff);
    }
    const Var fme = ad::mean_all(sq);
    out.values.nll = ad::value(nll)(0, 0);
    out.values.fme = ad::value(fme)(0, 0);
    out.values.has_fme = true;
    total = nll * wn + fme * cfg.omega_f;
  } else {
    auto col = constant_columns(tape, x);
    const Var ld = density_pass(m, params, col);
    const Var nll = -ad::mean_all(ld);
    out.values.nll = ad::value(nll)(0, 0);
    total = nll * wn;
  }
  if (cfg.omega_k > 0) {
    if (!target || !z) throw std::invalid_argument("loss_and_grad: the KLD term needs a target potential and base draws");
    auto col = constant_columns(tape, *z);
    const Var lds = sampling_pass(m, params, col);
    const Var kld = ad::mean_all(potential_var(*target, col) - lds);
    out.values.kld = ad::value(kld)(0, 0);
    out.values.has_kld = true;
    const Var kc = cfg.kld_cutoff ? lambda_var(kld) : kld;
    total = total + kc * cfg.omega_k;
  }
  out.values.total = ad::value(total)(0, 0);
  tape.backward(total);
  out.grad = model_params_grad(m, tape, params);
  return out;
}

std::vector<Eigen::Index> split_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<Eigen::Index> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<Eigen::Index>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

Points take_rows(const Points& a, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
  Points out(static_cast<Eigen::Index>(end - begin), a.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = a.row(idx[i]);
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_finite(double v, int it, const char* term) {
  if (!std::isfinite(v))
    throw TrainingAborted("training aborted at iteration " + std::to_string(it) + ": non-finite " + term, it, term);
}

}  // namespace

TrainResult train(FlowModel& m, const Dataset& data, const UnitPotential* target, const TrainConfig& cfg, std::uint64_t seed,
                  const TrainStreams& out) {
  cfg.validate();
  m.validate();
  if (data.dims() != m.dims) throw ConfigError("train: dataset and model dimensions differ");
  if (cfg.omega_k > 0 && !target) throw ConfigError("train: omega_k > 0 needs a target potential");
  const std::size_t n = data.size();
  const auto n_val = static_cast<std::size_t>(std::max<long long>(1, std::llround(cfg.val_fraction * static_cast<double>(n))));
  if (n_val >= n) throw ConfigError("train: dataset too small for a train/validation split");

  const auto perm = split_permutation(n, seed);
  const Points xv = take_rows(data.x, perm, 0, n_val);
  const Points fv = take_rows(data.f, perm, 0, n_val);
  std::vector<Eigen::Index> order(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);

  const double wn = cfg.effective_omega_n();
  const int kld_batch = cfg.kld_batch > 0 ? cfg.kld_batch : cfg.batch_size;
  const std::uint64_t val_seed = seed + 17;

  auto validate = [&](int it) {
    ValidationRow r;
    r.iter = it;
    r.nll = loss_nll(m, xv);
    r.fme = loss_fm(m, xv, fv);
    if (cfg.omega_k > 0) {
      r.kld = loss_kld(m, *target, kld_batch, val_seed, cfg.kld_cutoff);
      r.has_kld = true;
    }
    r.objective = wn * r.nll + cfg.omega_f * r.fme + (r.has_kld ? cfg.omega_k * r.kld : 0.0);
    check_finite(r.nll, it, "validation nll");
    check_finite(r.fme, it, "validation fme");
    if (r.has_kld) check_finite(r.kld, it, "validation kld");
    if (out.validation)
      *out.validation << it << ',' << num(r.nll) << ',' << num(r.fme) << ',' << (r.has_kld ? num(r.kld) : "NA") << '\n';
    return r;
  };

  if (out.metrics) *out.metrics << "iter,nll,fme,kld,grad_norm\n";
  if (out.validation) *out.validation << "iter,nll,fme,kld\n";

  TrainResult res;
  res.initial = validate(0);
  res.best = res.initial;
  res.last = res.initial;
  res.best_params = m.get_params();

  Adam adam(m.num_params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  std::vector<double> params = m.get_params();
  double lr = cfg.lr;
  std::size_t pos = 0;
  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size());
  for (int it = 1; it <= cfg.iterations; ++it) {
    if (pos + bs > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      pos = 0;
      lr *= cfg.lr_decay;
    }
    const Points xb = take_rows(data.x, order, pos, pos + bs);
    const Points fb = take_rows(data.f, order, pos, pos + bs);
    pos += bs;
    Points z;
    if (cfg.omega_k > 0) z = base_draws(m.dims, kld_batch, rng);
    const LossGrad lg = loss_and_grad(m, cfg, xb, &fb, target, cfg.omega_k > 0 ? &z : nullptr);

    check_finite(lg.values.nll, it, "nll");
    if (lg.values.has_fme) check_finite(lg.values.fme, it, "fme");
    if (lg.values.has_kld) check_finite(lg.values.kld, it, "kld");
    double gn = 0;
    for (double g : lg.grad) gn += g * g;
    gn = std::sqrt(gn);
    check_finite(gn, it, "gradient");
    if (out.metrics)
      *out.metrics << it << ',' << num(lg.values.nll) << ',' << (lg.values.has_fme ? num(lg.values.fme) : "NA") << ','
                   << (lg.values.has_kld ? num(lg.values.kld) : "NA") << ',' << num(gn) << '\n';

    adam.step(params, lg.grad, lr);
    m.set_params(params);

    if (it % cfg.eval_every == 0 || it == cfg.iterations) {
      res.last = validate(it);
      if (res.last.objective < res.best.objective) {
        res.best = res.last;
        res.best_params = params;
      }
    }
  }
  return res;
}

}  // namespace smoothflow
