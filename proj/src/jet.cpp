#include "epsdf/jet.hpp"

#include <cmath>

namespace epsdf {

double laplacian(const Jet2& jet) {
  const int d = jet.dim();
  double tr = 0.0;
  for (int i = 0; i < d; ++i) tr += jet.hess[packed_index(i, i, d)];
  return tr;
}

JetVec concat_jets(const JetVec& a, const JetVec& b) {
  if (a.dim != b.dim) throw ConfigError("concat_jets: dimension mismatch");
  JetVec out(a.units() + b.units(), a.dim);
  out.data.topRows(a.units()) = a.data;
  out.data.bottomRows(b.units()) = b.data;
  return out;
}

double softplus(double x, double beta) {
  const double t = beta * x;
  return (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)))) / beta;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Jet2 softplus_jet(const Jet2& a, double beta) {
  if (beta <= 0.0) throw ConfigError("softplus_jet: beta must be positive");
  const int d = a.dim();
  const double s = logistic(beta * a.value);
  const double sp1 = beta * s * (1.0 - s);  // second derivative of softplus
  Jet2 out = Jet2::constant(softplus(a.value, beta), d);
  out.grad = s * a.grad;
  out.hess = s * a.hess;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      out.hess[packed_index(i, j, d)] += sp1 * a.grad[i] * a.grad[j];
  return out;
}

JetVec softplus_jet(const JetVec& a, double beta) {
  if (beta <= 0.0) throw ConfigError("softplus_jet: beta must be positive");
  const int d = a.dim;
  JetVec out(a.units(), d);
  // value slot goes through the same scalar calls as the plain forward pass
  // so forward() and eval_jet().value agree bit-for-bit
  Eigen::ArrayXd s(a.units());
  for (Index u = 0; u < a.units(); ++u) {
    out.val()[u] = softplus(a.val()[u], beta);
    s[u] = logistic(beta * a.val()[u]);
  }
  out.grad() = a.grad().array().colwise() * s;
  out.hess() = a.hess().array().colwise() * s;
  const Eigen::ArrayXd sp1 = beta * s * (1.0 - s);
  for (int i = 0, c = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++c)
      out.hess().col(c).array() +=
          sp1 * a.grad().col(i).array() * a.grad().col(j).array();
  return out;
}

JetVec affine_jet(const Eigen::Ref<const RowMat>& weights,
                  const Eigen::Ref<const Vec>& bias, const JetVec& input) {
  if (weights.cols() != input.units())
    throw ConfigError("affine_jet: weight columns != input length");
  if (weights.rows() != bias.size())
    throw ConfigError("affine_jet: weight rows != bias length");
  JetVec out(weights.rows(), input.dim);
  // the value column keeps forward()'s gemv shape; derivative slots share
  // one product
  out.val().noalias() = weights * input.val();
  out.val() += bias;
  const int rest = input.slots() - 1;
  out.data.rightCols(rest).noalias() = weights * input.data.rightCols(rest);
  return out;
}

}  // namespace epsdf
