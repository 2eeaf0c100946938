#pragma once

#include "epsdf/types.hpp"

namespace epsdf {

// Symmetric d x d matrices are stored as the packed upper triangle in
// row-major order: (0,0),(0,1),...,(0,d-1),(1,1),...,(d-1,d-1).
constexpr int packed_size(int dim) { return dim * (dim + 1) / 2; }

constexpr int packed_index(int i, int j, int dim) {
  // requires i <= j
  return i * dim - i * (i - 1) / 2 + (j - i);
}

inline int packed_index_sym(int i, int j, int dim) {
  return i <= j ? packed_index(i, j, dim) : packed_index(j, i, dim);
}

/// Function value bundled with its exact gradient and Hessian with respect
/// to the d-dimensional input point. The Hessian is packed (upper triangle),
/// so symmetry holds structurally.
struct Jet2 {
  double value = 0.0;
  Vec grad;  // (d)
  Vec hess;  // (packed_size(d))

  Jet2() = default;
  Jet2(double v, Vec g, Vec h) : value(v), grad(std::move(g)), hess(std::move(h)) {}

  int dim() const { return int(grad.size()); }

  double hess_at(int i, int j) const { return hess[packed_index_sym(i, j, dim())]; }

  /// Densified symmetric Hessian.
  Mat hess_matrix() const {
    const int d = dim();
    Mat out(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out(i, j) = hess_at(i, j);
    return out;
  }

  static Jet2 constant(double v, int dim) {
    return {v, Vec::Zero(dim), Vec::Zero(packed_size(dim))};
  }

  /// Input-coordinate seed: value v, gradient e_axis, zero Hessian.
  static Jet2 seed(double v, int axis, int dim) {
    Jet2 j = constant(v, dim);
    j.grad[axis] = 1.0;
    return j;
  }
};

/// Trace of the Hessian.
double laplacian(const Jet2& jet);

/// Jets for a vector of units in structure-of-arrays form: one row per unit,
/// columns [value | grad (d) | packed Hessian]. Keeping all slots in one
/// matrix lets affine layers propagate every derivative with a single
/// product.
struct JetVec {
  Mat data;
  int dim = 0;

  JetVec() = default;
  JetVec(Index units, int dim_)
      : data(Mat::Zero(units, 1 + dim_ + packed_size(dim_))), dim(dim_) {}

  Index units() const { return data.rows(); }
  int hess_cols() const { return packed_size(dim); }
  int slots() const { return 1 + dim + hess_cols(); }

  auto val() { return data.col(0); }
  auto val() const { return data.col(0); }
  auto grad() { return data.middleCols(1, dim); }
  auto grad() const { return data.middleCols(1, dim); }
  auto hess() { return data.rightCols(hess_cols()); }
  auto hess() const { return data.rightCols(hess_cols()); }

  Jet2 row(Index i) const {
    return {val()[i], grad().row(i).transpose(), hess().row(i).transpose()};
  }

  void set_row(Index i, const Jet2& jet) {
    val()[i] = jet.value;
    grad().row(i) = jet.grad.transpose();
    hess().row(i) = jet.hess.transpose();
  }

  /// Seed jets for an input point: values x_k, gradients e_k, zero Hessians.
  static JetVec seed_point(const Eigen::Ref<const Vec>& x) {
    const int d = int(x.size());
    JetVec j(d, d);
    j.val() = x;
    j.grad().setIdentity();
    return j;
  }
};

/// Row-wise concatenation (used by skip connections).
JetVec concat_jets(const JetVec& a, const JetVec& b);

/// Numerically stable softplus_beta(x) = log(1 + exp(beta*x)) / beta,
/// shifted log-sum-exp form (safe for |beta*x| up to ~1e4).
double softplus(double x, double beta);

/// Logistic sigmoid, stable for large |x|.
double logistic(double x);

/// softplus_beta applied to a jet. Chain rule:
///   value' = sigma(beta v), value'' = beta sigma (1 - sigma).
Jet2 softplus_jet(const Jet2& a, double beta);
JetVec softplus_jet(const JetVec& a, double beta);

/// Affine map W x + b lifted to jets. The second derivative of an affine map
/// vanishes, so every slot combines linearly with the same weights.
JetVec affine_jet(const Eigen::Ref<const RowMat>& weights,
                  const Eigen::Ref<const Vec>& bias, const JetVec& input);

}  // namespace epsdf
