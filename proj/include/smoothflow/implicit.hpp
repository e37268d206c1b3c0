#pragma once

// Derivatives of a numerically inverted bijection x = beta(y; theta), with
// y = alpha(x; theta), expressed through forward-direction quantities at the
// recovered x:
//
//   d beta / dy       = 1 / alpha'
//   d beta / dtheta   = -alpha_theta / alpha'
//   d g_beta / dy     = -g_alpha' / alpha'
//   d g_beta / dtheta = (g_alpha' alpha_theta - alpha'_theta) / alpha'
//
// where g = log of the x-derivative and primes are x-derivatives. The
// bisection iterates never enter these expressions.

#include <Eigen/Core>

#include <vector>

#include "smoothflow/rootfind.hpp"
#include "smoothflow/transform.hpp"

namespace smoothflow {

struct InverseCallRecord {
  std::vector<double> x;             // recovered inputs
  std::vector<TransformJet> jets;    // forward jets at x
  const ScalarBijection* transform;  // parameters used; must outlive the record

  std::size_t size() const { return x.size(); }
};

struct InverseResult {
  std::vector<double> x;
  std::vector<double> neg_log_jac;  // -g_alpha(x), the inverse direction's log-det
  InverseCallRecord record;
};

InverseResult inverse_forward(const ScalarBijection& t, const std::vector<double>& y, const RootFindConfig& cfg);

/// Vector-Jacobian product of (x, neg_log_jac) with respect to y.
std::vector<double> backward_input(const InverseCallRecord& rec, const std::vector<double>& grad_x,
                                   const std::vector<double>& grad_ldj);

/// Same product with respect to the transform parameters, summed over the batch.
Eigen::VectorXd backward_params(const InverseCallRecord& rec, const std::vector<double>& grad_x,
                                const std::vector<double>& grad_ldj);

std::vector<double> inverse_second_derivative(const InverseCallRecord& rec);
std::vector<double> inverse_third_derivative(const InverseCallRecord& rec);

/// Row i holds d/dtheta of d2beta/dy2 at element i.
Eigen::MatrixXd inverse_mixed_second_param(const InverseCallRecord& rec);

}  // namespace smoothflow
