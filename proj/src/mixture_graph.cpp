#include "smoothflow/mixture_graph.hpp"

#include <memory>

namespace smoothflow {

using ad::Array;

Array mixture_invert_rows(const TransformerConfig& cfg, const Array& R, const Array& y, const RootFindConfig& rf) {
  const Eigen::Index n = R.rows();
  std::vector<MixtureTransform> rows;
  rows.reserve(static_cast<std::size_t>(n));
  std::vector<double> target(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> raw(static_cast<std::size_t>(R.cols()));
    for (Eigen::Index j = 0; j < R.cols(); ++j) raw[static_cast<std::size_t>(j)] = R(i, j);
    rows.emplace_back(cfg, std::move(raw));
    double v = y(i, 0);
    if (cfg.domain == Domain::Circle) v -= std::floor(v);
    target[static_cast<std::size_t>(i)] = v;
  }
  std::vector<const ScalarBijection*> maps;
  for (const auto& t : rows) maps.push_back(&t);
  const auto res = multibin_invert(ScalarMapBatch(std::move(maps)), target, rf);
  Array z(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) z(i, 0) = res.x[static_cast<std::size_t>(i)];
  return z;
}

Array mixture_slope(const TransformerConfig& cfg, const Array& R, const Array& z) {
  return mixture_graph(cfg, ad::Tensor(R), ad::Tensor(z)).dy.v;
}

Array mixture_param_vjp(const TransformerConfig& cfg, const Array& R, const Array& z, const Array& seed) {
  ad::Tape tape;
  const ad::Var r = tape.leaf(R);
  const ad::Var zc = tape.constant(z);
  const auto out = mixture_graph(cfg, r, zc);
  const ad::Var loss = ad::sum_all(out.y * tape.constant(seed));
  tape.backward(loss);
  return tape.grad(r);
}

ad::Tensor mixture_invert(const TransformerConfig& cfg, const ad::Tensor& R, const ad::Tensor& y, const RootFindConfig& rf) {
  return ad::Tensor(mixture_invert_rows(cfg, R.v, y.v, rf));
}

ad::Var mixture_invert(const TransformerConfig& cfg, const ad::Var& R, const ad::Var& y, const RootFindConfig& rf) {
  if (R.tape != y.tape) throw std::invalid_argument("mixture_invert: operands on different tapes");
  ad::Tape& t = *R.tape;
  Array z = mixture_invert_rows(cfg, ad::value(R), ad::value(y), rf);
  const int ir = R.id, iy = y.id;
  const bool rg = t.requires_grad(ir) || t.requires_grad(iy);
  Array rv = rg ? ad::value(R) : Array();
  Array zv = rg ? z : Array();
  return t.push(std::move(z), rg, [cfg, rv = std::move(rv), zv = std::move(zv), ir, iy](ad::Tape& tp, const Array& g) {
    const Array gy = g / mixture_slope(cfg, rv, zv);
    tp.accumulate(iy, gy);
    if (tp.requires_grad(ir)) tp.accumulate(ir, mixture_param_vjp(cfg, rv, zv, -gy));
  });
}

}  // namespace smoothflow
