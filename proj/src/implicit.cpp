#include "smoothflow/implicit.hpp"

#include <stdexcept>

namespace smoothflow {

namespace {

void check_grads(const InverseCallRecord& rec, const std::vector<double>& gx, const std::vector<double>& gl) {
  if (gx.size() != rec.size() || gl.size() != rec.size()) throw std::invalid_argument("implicit backward: gradient shape mismatch");
}

}  // namespace

InverseResult inverse_forward(const ScalarBijection& t, const std::vector<double>& y, const RootFindConfig& cfg) {
  std::vector<double> x;
  if (t.analytic_inverse(0.0)) {
    for (double v : y) x.push_back(*t.analytic_inverse(v));
  } else {
    ScalarMapBatch f(std::vector<const ScalarBijection*>(y.size(), &t));
    x = multibin_invert(f, y, cfg).x;
  }
  InverseResult r;
  r.record.transform = &t;
  r.record.x = x;
  for (double xi : x) {
    r.record.jets.push_back(t.jet(xi));
    r.neg_log_jac.push_back(-r.record.jets.back().g);
  }
  r.x = std::move(x);
  return r;
}

std::vector<double> backward_input(const InverseCallRecord& rec, const std::vector<double>& gx, const std::vector<double>& gl) {
  check_grads(rec, gx, gl);
  std::vector<double> gy(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& j = rec.jets[i];
    gy[i] = gx[i] / j.dy - gl[i] * j.dg / j.dy;
  }
  return gy;
}

Eigen::VectorXd backward_params(const InverseCallRecord& rec, const std::vector<double>& gx, const std::vector<double>& gl) {
  check_grads(rec, gx, gl);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rec.transform->num_params()));
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& j = rec.jets[i];
    const ParamJacobian pj = rec.transform->param_jacobian(rec.x[i]);
    g += gx[i] * (-pj.dy / j.dy);
    g += gl[i] * ((j.dg * pj.dy - pj.ddy) / j.dy);
  }
  return g;
}

std::vector<double> inverse_second_derivative(const InverseCallRecord& rec) {
  std::vector<double> out(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& j = rec.jets[i];
    out[i] = -j.dg / (j.dy * j.dy);
  }
  return out;
}

std::vector<double> inverse_third_derivative(const InverseCallRecord& rec) {
  std::vector<double> out(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& j = rec.jets[i];
    const double d4 = j.dy * j.dy * j.dy * j.dy;
    // d/dy of -alpha''/alpha'^3 along x = beta(y).
    out[i] = (3.0 * j.dg * j.d2y - j.d3y) / d4;
  }
  return out;
}

Eigen::MatrixXd inverse_mixed_second_param(const InverseCallRecord& rec) {
  const auto np = static_cast<Eigen::Index>(rec.transform->num_params());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rec.size()), np);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& j = rec.jets[i];
    const ParamJacobian pj = rec.transform->param_jacobian(rec.x[i]);
    const Eigen::VectorXd x_theta = -pj.dy / j.dy;
    const double a1 = j.dy, a2 = j.d2y, a3 = j.d3y;
    const double a1_3 = a1 * a1 * a1;
    const Eigen::VectorXd d_a2 = pj.dd2y + a3 * x_theta;
    const Eigen::VectorXd d_a1 = pj.ddy + a2 * x_theta;
    out.row(static_cast<Eigen::Index>(i)) = (-(d_a2 / a1_3) + 3.0 * a2 * d_a1 / (a1_3 * a1)).transpose();
  }
  return out;
}

}  // namespace smoothflow
