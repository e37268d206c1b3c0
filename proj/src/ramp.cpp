#include "smoothflow/ramp.hpp"

namespace smoothflow {

void RampSpec::validate() const {
  if (kind == RampKind::Monomial) {
    if (order < 1) throw std::invalid_argument("monomial ramp order must be >= 1, got " + std::to_string(order));
    return;
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("exponential ramp alpha must be > 0, got " + std::to_string(alpha));
  if (!(beta >= 1.0) || !std::isfinite(beta))
    throw std::invalid_argument("exponential ramp beta must be >= 1, got " + std::to_string(beta));
}

RampJet ramp_eval(const RampSpec& spec, double x) { return ramp_jet<double>(spec, spec.alpha, x); }

SigmoidJet sigmoid_eval(const RampSpec& spec, double x) { return sigmoid_jet<double>(spec, spec.alpha, x); }

std::string to_string(RampKind kind) { return kind == RampKind::Monomial ? "monomial" : "exponential"; }

RampKind ramp_kind_from_string(const std::string& name) {
  if (name == "monomial") return RampKind::Monomial;
  if (name == "exponential") return RampKind::Exponential;
  throw std::invalid_argument("unknown ramp kind '" + name + "'");
}

}  // namespace smoothflow
