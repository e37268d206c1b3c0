#pragma once

// Reference implementations used only by tests. Nothing here calls into the
// library's derivative code.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double rho_exp(double alpha, double beta, double x) { return x <= 0 ? 0.0 : std::exp(-1.0 / (alpha * std::pow(x, beta))); }

inline double sigmoid_exp(double alpha, double beta, double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  // Compare in the log domain so tiny ramps do not underflow to 0/0.
  const double la = -1.0 / (alpha * std::pow(x, beta));
  const double lb = -1.0 / (alpha * std::pow(1.0 - x, beta));
  return 1.0 / (1.0 + std::exp(lb - la));
}

// Derivative of the sigmoid for beta = 1 by the quotient rule on rho.
inline double sigmoid_exp_d1(double alpha, double x) {
  if (x <= 0 || x >= 1) return 0.0;
  const double y = 1.0 - x;
  const double la = -1.0 / (alpha * x), lb = -1.0 / (alpha * y);
  const double m = std::max(la, lb);
  const double a = std::exp(la - m), b = std::exp(lb - m);
  const double da = a / (alpha * x * x), db = b / (alpha * y * y);
  return (da * b + a * db) / ((a + b) * (a + b));
}

inline double central(const std::function<double(double)>& f, double x, double h) { return (f(x + h) - f(x - h)) / (2 * h); }

inline double central2(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
}

inline double central3(const std::function<double(double)>& f, double x, double h) {
  return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h * h * h);
}

// Richardson extrapolation of a second-order accurate difference operator.
inline double richardson(const std::function<double(double)>& op, double h) { return (4 * op(h / 2) - op(h)) / 3; }

// Plain bisection on an increasing f over [lo, hi].
inline double bisect(const std::function<double(double)>& f, double y, double lo = 0.0, double hi = 1.0, int iters = 200) {
  for (int i = 0; i < iters && hi - lo > 0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double trapezoid(const std::vector<double>& y, double h) {
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

// Scalar relative error with an absolute floor for values near zero.
inline double rel_err(double a, double b, double floor = 1e-12) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}); }

// Norm-wise relative error of vectors.
inline double rel_err(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-12) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

inline double rel_err(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b, double floor = 1e-12) {
  return std::sqrt((a - b).square().sum()) / std::max(std::sqrt(b.square().sum()), floor);
}

}  // namespace oracle
