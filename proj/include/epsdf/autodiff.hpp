#pragma once

#include <utility>
#include <vector>

#include "epsdf/jet.hpp"
#include "epsdf/mlp.hpp"

namespace epsdf {

/// Forward state cached by eval_jet for one input point: the pre-activation
/// jets of every hidden layer. Activations are cheap to recompute from these
/// during the reverse sweep, so they are not stored.
struct JetTape {
  MlpConfig config;
  Vec x;
  std::vector<JetVec> preacts;
  Jet2 output;

  /// Re-runs the activation/affine chain from the cached pre-activations and
  /// returns the output jet. Equals `output` bit-exactly by construction.
  Jet2 replay(const MlpModel& model) const;
};

/// f(x) with exact gradient and Hessian by forward jet propagation.
Jet2 eval_jet(const MlpModel& model, const Eigen::Ref<const Vec>& x);

/// Same, also filling the tape needed by backprop_point.
Jet2 eval_jet(const MlpModel& model, const Eigen::Ref<const Vec>& x, JetTape& tape);

/// Partials of a scalar loss with respect to one point's value, gradient and
/// Laplacian.
struct LossSeed {
  double df = 0.0;
  Vec dgrad;
  double dlap = 0.0;

  static LossSeed zero(int dim) { return {0.0, Vec::Zero(dim), 0.0}; }
  bool is_zero() const { return df == 0.0 && dlap == 0.0 && dgrad.isZero(0.0); }
};

/// Gradient of a scalar loss with respect to the flat parameter vector.
using ParamGradient = Vec;

/// Exact dL/dtheta for the scalar L whose partials with respect to this
/// point's (f, grad f, laplacian f) are given by `seed`. The adjoint sweep
/// treats the whole jet-forward computation, Hessian path included, as the
/// differentiated program. Accumulates into `out` (+=).
void backprop_point_accumulate(const MlpModel& model, const JetTape& tape,
                               const LossSeed& seed, Eigen::Ref<Vec> out);

ParamGradient backprop_point(const MlpModel& model, const JetTape& tape,
                             const LossSeed& seed);

}  // namespace epsdf
