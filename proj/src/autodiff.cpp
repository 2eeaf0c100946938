#include "epsdf/autodiff.hpp"

#include <cmath>

namespace epsdf {

namespace {

struct SoftplusStats {
  Eigen::ArrayXd s;    // logistic(beta u): first derivative of softplus
  Eigen::ArrayXd sp1;  // beta s (1-s): second derivative
  Eigen::ArrayXd sp2;  // beta^2 s (1-s)(1-2s): third derivative
};

SoftplusStats softplus_stats(const JetVec& z, double beta) {
  const Eigen::ArrayXd t = beta * z.val().array();
  Eigen::ArrayXd s =
      (t >= 0.0).select(1.0 / (1.0 + (-t).exp()), t.exp() / (1.0 + t.exp()));
  Eigen::ArrayXd sp1 = beta * s * (1.0 - s);
  Eigen::ArrayXd sp2 = beta * sp1 * (1.0 - 2.0 * s);
  return {std::move(s), std::move(sp1), std::move(sp2)};
}

/// Adjoint of a = softplus_jet(z, beta): converts the adjoint of the
/// activation jets into the adjoint of the pre-activation jets.
JetVec softplus_backward(const JetVec& z, double beta, const JetVec& abar) {
  const int d = z.dim;
  const auto [s, sp1, sp2] = softplus_stats(z, beta);
  JetVec zbar(z.units(), d);

  // hess slot: out.hess = s * z.hess + sp1 * outer(z.grad)
  zbar.hess() = abar.hess().array().colwise() * s;

  // grad slot: out.grad = s * z.grad, plus the outer-product coupling from
  // the hess slot. For packed entry (i,j): d(g_i g_j)/dg_k hits k=i and k=j
  // (doubled on the diagonal).
  zbar.grad() = abar.grad().array().colwise() * s;
  Mat q = Mat::Zero(z.units(), d);
  for (int i = 0, c = 0; i < d; ++i) {
    for (int j = i; j < d; ++j, ++c) {
      if (i == j) {
        q.col(i).array() += 2.0 * abar.hess().col(c).array() * z.grad().col(i).array();
      } else {
        q.col(i).array() += abar.hess().col(c).array() * z.grad().col(j).array();
        q.col(j).array() += abar.hess().col(c).array() * z.grad().col(i).array();
      }
    }
  }
  zbar.grad().array() += q.array().colwise() * sp1;

  // value slot: every output component depends on u through s(u).
  Eigen::ArrayXd vbar = abar.val().array() * s;
  vbar += (abar.grad().array() * z.grad().array()).rowwise().sum() * sp1;
  for (int i = 0, c = 0; i < d; ++i) {
    for (int j = i; j < d; ++j, ++c) {
      vbar += abar.hess().col(c).array() *
              (sp1 * z.hess().col(c).array() +
               sp2 * z.grad().col(i).array() * z.grad().col(j).array());
    }
  }
  zbar.val() = vbar;
  return zbar;
}

void check_tape(const MlpModel& model, const JetTape& tape) {
  if (tape.config != model.config ||
      Index(tape.preacts.size()) != model.config.num_hidden_layers ||
      model.params.size() != param_count(model.config))
    throw ConfigError("backprop_point: tape does not match model");
}

[[noreturn]] void report_nonfinite(const MlpModel& model) {
  const auto shapes = layer_shapes(model.config);
  for (int l = 0; l < model.config.num_layers(); ++l) {
    if (!model.weights(shapes[l]).allFinite() || !model.bias(shapes[l]).allFinite())
      throw NumericError("eval_jet: non-finite parameter in layer " + std::to_string(l));
  }
  throw NumericError("eval_jet: non-finite jet output");
}

}  // namespace

Jet2 JetTape::replay(const MlpModel& model) const {
  const auto shapes = layer_shapes(model.config);
  const JetVec a = softplus_jet(preacts.back(), model.config.softplus_beta);
  const LayerShape& out = shapes.back();
  return affine_jet(model.weights(out), model.bias(out), a).row(0);
}

Jet2 eval_jet(const MlpModel& model, const Eigen::Ref<const Vec>& x) {
  JetTape tape;
  return eval_jet(model, x, tape);
}

Jet2 eval_jet(const MlpModel& model, const Eigen::Ref<const Vec>& x, JetTape& tape) {
  const MlpConfig& cfg = model.config;
  if (x.size() != cfg.input_dim) throw ConfigError("eval_jet: point dimension mismatch");
  if (model.params.size() != param_count(cfg))
    throw ConfigError("eval_jet: parameter count does not match config");
  const auto shapes = layer_shapes(cfg);

  tape.config = cfg;
  tape.x = x;
  tape.preacts.resize(cfg.num_hidden_layers);

  const JetVec seed = JetVec::seed_point(x);
  JetVec h = seed;
  for (int l = 0; l < cfg.num_hidden_layers; ++l) {
    if (cfg.has_skip(l)) h = concat_jets(h, seed);
    tape.preacts[l] = affine_jet(model.weights(shapes[l]), model.bias(shapes[l]), h);
    h = softplus_jet(tape.preacts[l], cfg.softplus_beta);
  }
  const LayerShape& out = shapes.back();
  const JetVec fjet = affine_jet(model.weights(out), model.bias(out), h);
  tape.output = fjet.row(0);
  if (!tape.output.grad.allFinite() || !tape.output.hess.allFinite() ||
      !std::isfinite(tape.output.value))
    report_nonfinite(model);
  return tape.output;
}

void backprop_point_accumulate(const MlpModel& model, const JetTape& tape,
                               const LossSeed& seed, Eigen::Ref<Vec> out) {
  check_tape(model, tape);
  const MlpConfig& cfg = model.config;
  const int d = cfg.input_dim;
  if (seed.dgrad.size() != d) throw ConfigError("backprop_point: seed dimension mismatch");
  if (out.size() != model.params.size())
    throw ConfigError("backprop_point: gradient buffer size mismatch");
  if (seed.is_zero()) return;

  const auto shapes = layer_shapes(cfg);
  const double beta = cfg.softplus_beta;
  const JetVec xseed = JetVec::seed_point(tape.x);

  // Adjoint of the output jet: dlap lands on the diagonal of the packed
  // Hessian (the Laplacian is its trace).
  JetVec zbar(1, d);
  zbar.val()[0] = seed.df;
  zbar.grad().row(0) = seed.dgrad.transpose();
  for (int i = 0; i < d; ++i) zbar.hess()(0, packed_index(i, i, d)) = seed.dlap;

  // Walk the affine layers from the output back to the input; `zbar` holds
  // the adjoint of layer l's pre-activation jets on entry to iteration l.
  for (int l = cfg.num_layers() - 1; l >= 0; --l) {
    const LayerShape& s = shapes[l];
    JetVec in;
    if (l == 0) {
      in = xseed;
    } else {
      in = softplus_jet(tape.preacts[l - 1], beta);
      if (cfg.has_skip(l)) in = concat_jets(in, xseed);
    }

    Eigen::Map<RowMat> wgrad(out.data() + s.weight_offset, s.out, s.in);
    wgrad.noalias() += zbar.data * in.data.transpose();
    out.segment(s.bias_offset, s.out) += zbar.val();

    if (l == 0) break;
    JetVec abar(s.in, d);
    abar.data.noalias() = model.weights(s).transpose() * zbar.data;
    if (cfg.has_skip(l)) abar.data.conservativeResize(cfg.hidden_width, Eigen::NoChange);
    zbar = softplus_backward(tape.preacts[l - 1], beta, abar);
  }
}

ParamGradient backprop_point(const MlpModel& model, const JetTape& tape,
                             const LossSeed& seed) {
  ParamGradient grad = Vec::Zero(model.params.size());
  backprop_point_accumulate(model, tape, seed, grad);
  return grad;
}

}  // namespace epsdf
