#include "epsdf/losses.hpp"

#include <cmath>

#include "epsdf/parallel.hpp"

namespace epsdf {

namespace {

constexpr Index kChunk = 32;  // points per work unit in batched evaluation

void require_nonempty(const std::vector<Jet2>& jets, const char* who) {
  if (jets.empty()) throw ConfigError(std::string(who) + ": empty batch");
}

std::vector<LossSeed> zero_seeds(std::size_t n, int dim) {
  return {n, LossSeed::zero(dim)};
}

}  // namespace

void LossWeights::validate() const {
  if (lambda_eikonal < 0.0 || lambda_laplacian < 0.0 || lambda_normal < 0.0)
    throw ConfigError("LossWeights: weights must be non-negative");
  if (tau_edge <= 0.0) throw ConfigError("LossWeights: tau_edge must be positive");
}

double loss_vanish(const std::vector<Jet2>& jets, std::vector<LossSeed>& seeds) {
  require_nonempty(jets, "loss_vanish");
  const double n = double(jets.size());
  seeds = zero_seeds(jets.size(), jets[0].dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < jets.size(); ++i) {
    sum += std::abs(jets[i].value);
    if (jets[i].value > 0.0) seeds[i].df = 1.0 / n;
    else if (jets[i].value < 0.0) seeds[i].df = -1.0 / n;
  }
  return sum / n;
}

double loss_eikonal(const std::vector<Jet2>& jets, std::vector<LossSeed>& seeds) {
  require_nonempty(jets, "loss_eikonal");
  const double n = double(jets.size());
  seeds = zero_seeds(jets.size(), jets[0].dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < jets.size(); ++i) {
    const double norm = jets[i].grad.norm();
    const double r = norm - 1.0;
    sum += r * r;
    if (norm > 0.0) seeds[i].dgrad = (2.0 * r / (n * norm)) * jets[i].grad;
  }
  return sum / n;
}

double loss_normal(const std::vector<Jet2>& jets, const Mat& gt_normals,
                   std::vector<LossSeed>& seeds) {
  require_nonempty(jets, "loss_normal");
  if (Index(jets.size()) != gt_normals.rows() ||
      gt_normals.cols() != jets[0].dim())
    throw ConfigError("loss_normal: normal count/dimension mismatch");
  const double n = double(jets.size());
  seeds = zero_seeds(jets.size(), jets[0].dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < jets.size(); ++i) {
    const Vec diff = jets[i].grad - gt_normals.row(Index(i)).transpose();
    const double norm = diff.norm();
    sum += norm;
    if (norm > 0.0) seeds[i].dgrad = diff / (n * norm);
  }
  return sum / n;
}

double loss_neighbor(const std::vector<Jet2>& jets,
                     const std::vector<std::vector<int>>& neighbor_index,
                     std::vector<LossSeed>& seeds) {
  require_nonempty(jets, "loss_neighbor");
  if (neighbor_index.size() != jets.size())
    throw ConfigError("loss_neighbor: neighbor table size mismatch");
  const std::size_t n = jets.size();
  std::size_t pairs = 0;
  for (const auto& nei : neighbor_index) {
    if (nei.size() >= n)
      throw ConfigError("loss_neighbor: k exceeds batch size - 1");
    for (int j : nei)
      if (j < 0 || std::size_t(j) >= n)
        throw ConfigError("loss_neighbor: neighbor index out of range");
    pairs += nei.size();
  }
  if (pairs == 0) throw ConfigError("loss_neighbor: empty neighbor table");
  seeds = zero_seeds(n, jets[0].dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : neighbor_index[i]) {
      const Vec diff = jets[i].grad - jets[std::size_t(j)].grad;
      const double norm = diff.norm();
      sum += norm;
      if (norm > 0.0) {
        const Vec u = diff / (norm * double(pairs));
        seeds[i].dgrad += u;
        seeds[std::size_t(j)].dgrad -= u;
      }
    }
  }
  return sum / double(pairs);
}

std::vector<bool> select_non_edge(const Vec& laplacians, double tau) {
  if (tau <= 0.0) throw ConfigError("select_non_edge: tau must be positive");
  std::vector<bool> mask(std::size_t(laplacians.size()));
  for (Index i = 0; i < laplacians.size(); ++i)
    mask[std::size_t(i)] = std::abs(laplacians[i]) < tau;
  return mask;
}

double loss_laplacian(const std::vector<Jet2>& jets, const std::vector<bool>& mask,
                      std::vector<LossSeed>& seeds) {
  require_nonempty(jets, "loss_laplacian");
  if (mask.size() != jets.size())
    throw ConfigError("loss_laplacian: mask length mismatch");
  seeds = zero_seeds(jets.size(), jets[0].dim());
  std::size_t m = 0;
  for (bool keep : mask) m += keep;
  if (m == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < jets.size(); ++i) {
    if (!mask[i]) continue;
    const double lap = laplacian(jets[i]);
    sum += lap * lap;
    seeds[i].dlap = 2.0 * lap / double(m);
  }
  return sum / double(m);
}

TotalLossResult total_loss(const MlpModel& model,
                           const Eigen::Ref<const Mat>& surface_points,
                           const Eigen::Ref<const Mat>& domain_points,
                           const LossWeights& weights, const Mat* surface_normals) {
  weights.validate();
  const int d = model.config.input_dim;
  if (surface_points.rows() == 0) throw ConfigError("total_loss: empty surface batch");
  if (surface_points.cols() != d ||
      (domain_points.rows() > 0 && domain_points.cols() != d))
    throw ConfigError("total_loss: point dimension mismatch");

  const Index n_s = surface_points.rows();
  const Index n_d = domain_points.rows();
  const Index n = n_s + n_d;

  // Evaluate jets (with tapes) at surface then domain points.
  const std::size_t total_points = std::size_t(n);
  std::vector<JetTape> tapes(total_points);
  std::vector<Jet2> jets(total_points);
  for_chunks(n, kChunk, [&](Index begin, Index end, Index, int) {
    for (Index i = begin; i < end; ++i) {
      const Vec p = i < n_s ? Vec(surface_points.row(i).transpose())
                            : Vec(domain_points.row(i - n_s).transpose());
      jets[std::size_t(i)] = eval_jet(model, p, tapes[std::size_t(i)]);
    }
  });
  const std::vector<Jet2> surface_jets(jets.begin(), jets.begin() + n_s);

  TotalLossResult result;
  LossBreakdown& br = result.breakdown;

  std::vector<LossSeed> vanish_seeds, eikonal_seeds, laplace_seeds, normal_seeds;
  br.vanish = loss_vanish(surface_jets, vanish_seeds);
  br.eikonal = loss_eikonal(jets, eikonal_seeds);

  Vec laps(n_s);
  for (Index i = 0; i < n_s; ++i) laps[i] = laplacian(surface_jets[std::size_t(i)]);
  br.non_edge_mask = select_non_edge(laps, weights.tau_edge);
  br.laplacian = loss_laplacian(surface_jets, br.non_edge_mask, laplace_seeds);
  std::size_t masked_in = 0;
  for (bool keep : br.non_edge_mask) masked_in += keep;
  br.edge_fraction = 1.0 - double(masked_in) / double(n_s);

  const bool use_normal = weights.lambda_normal > 0.0;
  if (use_normal) {
    if (surface_normals == nullptr || surface_normals->rows() != n_s)
      throw ConfigError("total_loss: normal supervision requested without matching normals");
    br.normal = loss_normal(surface_jets, *surface_normals, normal_seeds);
  }

  br.total = br.vanish + weights.lambda_eikonal * br.eikonal +
             weights.lambda_laplacian * br.laplacian +
             (use_normal ? weights.lambda_normal * br.normal : 0.0);

  // Fuse term seeds per point and run the adjoint sweeps; per-worker partial
  // gradients are reduced in worker order.
  std::vector<LossSeed> fused(std::size_t(n), LossSeed::zero(d));
  for (Index i = 0; i < n; ++i) {
    LossSeed& s = fused[std::size_t(i)];
    s.dgrad = weights.lambda_eikonal * eikonal_seeds[std::size_t(i)].dgrad;
    if (i < n_s) {
      s.df = vanish_seeds[std::size_t(i)].df;
      s.dlap = weights.lambda_laplacian * laplace_seeds[std::size_t(i)].dlap;
      if (use_normal) s.dgrad += weights.lambda_normal * normal_seeds[std::size_t(i)].dgrad;
    }
  }

  const int workers = plan_workers(num_chunks(n, kChunk));
  std::vector<Vec> partials(std::size_t(workers), Vec::Zero(model.params.size()));
  for_chunks(n, kChunk, [&](Index begin, Index end, Index, int w) {
    for (Index i = begin; i < end; ++i)
      backprop_point_accumulate(model, tapes[std::size_t(i)], fused[std::size_t(i)],
                                partials[std::size_t(w)]);
  });
  result.gradient = Vec::Zero(model.params.size());
  for (const Vec& p : partials) result.gradient += p;
  return result;
}

}  // namespace epsdf
