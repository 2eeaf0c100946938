#pragma once

#include <vector>

#include "epsdf/autodiff.hpp"
#include "epsdf/jet.hpp"

namespace epsdf {

/// Weights of the total objective. The Laplacian term is restricted each
/// call to points whose |laplacian| stays below tau_edge (dynamic edge
/// sampling); tau_edge = 1e30 effectively disables the restriction.
struct LossWeights {
  double lambda_eikonal = 0.1;
  double lambda_laplacian = 0.001;
  double lambda_normal = 0.0;  // off: normals are not used as supervision
  double tau_edge = 20.0;

  void validate() const;
};

/// Per-term values and the edge-sampling mask for one evaluation.
struct LossBreakdown {
  double vanish = 0.0;
  double eikonal = 0.0;
  double laplacian = 0.0;
  double neighbor = 0.0;  // diagnostic only, never part of the objective
  double normal = 0.0;
  double total = 0.0;
  std::vector<bool> non_edge_mask;  // over the surface batch
  double edge_fraction = 0.0;
};

// Every term returns its mean value and fills one partial seed per jet.
// Seeds are term-local (unweighted); total_loss fuses them.

/// Mean |f| over the batch. Subgradient at f = 0 is 0.
double loss_vanish(const std::vector<Jet2>& jets, std::vector<LossSeed>& seeds);

/// Mean (|grad f| - 1)^2 over the batch; zero-gradient points seed 0.
double loss_eikonal(const std::vector<Jet2>& jets, std::vector<LossSeed>& seeds);

/// Mean |grad f - n_gt| over the batch. gt_normals: one unit row per jet.
double loss_normal(const std::vector<Jet2>& jets, const Mat& gt_normals,
                   std::vector<LossSeed>& seeds);

/// Neighborhood gradient-consistency baseline: mean over (point, neighbor)
/// pairs of |grad f(x) - grad f(x_i)|. Kept as an ablation diagnostic.
double loss_neighbor(const std::vector<Jet2>& jets,
                     const std::vector<std::vector<int>>& neighbor_index,
                     std::vector<LossSeed>& seeds);

/// Dynamic edge sampling: mask[i] = (|laplacians[i]| < tau), strictly, so a
/// value equal to tau counts as an edge point.
std::vector<bool> select_non_edge(const Vec& laplacians, double tau);

/// Mean (laplacian f)^2 over masked-in points; 0 with zero seeds when the
/// mask is all-false.
double loss_laplacian(const std::vector<Jet2>& jets, const std::vector<bool>& mask,
                      std::vector<LossSeed>& seeds);

struct TotalLossResult {
  LossBreakdown breakdown;
  ParamGradient gradient;
};

/// The full objective: vanish and the edge-masked Laplacian term on the
/// surface batch, Eikonal on surface plus domain points, each point's fused
/// seed pushed through backprop_point. Rows of the point matrices are
/// points. surface_normals (optional) enables the supervised normal term
/// when lambda_normal > 0.
TotalLossResult total_loss(const MlpModel& model,
                           const Eigen::Ref<const Mat>& surface_points,
                           const Eigen::Ref<const Mat>& domain_points,
                           const LossWeights& weights,
                           const Mat* surface_normals = nullptr);

}  // namespace epsdf
