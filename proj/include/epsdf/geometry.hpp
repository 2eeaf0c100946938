#pragma once

#include <functional>
#include <string>

#include "epsdf/autodiff.hpp"
#include "epsdf/dataio.hpp"
#include "epsdf/mesh.hpp"

namespace epsdf {

/// Scalar field evaluated over many points at once (rows are points).
using BatchField = std::function<Vec(const Eigen::Ref<const Mat>&)>;

/// The trained implicit function as a batch field.
BatchField field_of(const MlpModel& model);

/// Zero level set of the field as a triangle mesh (3D marching cubes) or
/// segment polyline (2D marching squares). The grid covers the 1.1-scaled
/// bbox with `resolution` cells per axis and linear edge interpolation;
/// ambiguous cases follow the fixed classic lookup tables, so the result is
/// deterministic. Vertices shared between cells are welded.
TriMesh extract_isosurface(const BatchField& field, const Bbox& bbox, int resolution);

/// Unit gradients of the field at the given points. Zero-gradient points are
/// returned as zero vectors; *zero_grad_count (optional) receives how many.
Mat estimate_normals(const MlpModel& model, const Eigen::Ref<const Mat>& points,
                     Index* zero_grad_count = nullptr);

/// Points whose Laplacian magnitude exceeds tau, i.e. sharp-feature
/// candidates, plus the per-point Laplacian values.
struct EdgeReport {
  std::vector<Index> edge_indices;  // into the queried point set
  Mat edge_points;                  // (k x d)
  Vec laplacian_values;             // one per queried point
  double tau = 0.0;
};

EdgeReport detect_edges(const MlpModel& model, const Eigen::Ref<const Mat>& points,
                        double tau);

/// Distribution of |laplacian| over a point set: fixed-width bins spanning
/// [0, max] plus the 50/90/99% quantiles.
struct LaplacianHistogram {
  double bin_width = 0.0;
  Eigen::VectorXi counts;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;
  Index total = 0;
};

LaplacianHistogram laplacian_histogram(const MlpModel& model,
                                       const Eigen::Ref<const Mat>& points, int bins);

/// CSV writers for the artifacts above. The edge report lists detected edge
/// points only, columns index,<coords>,abs_laplacian. Histogram columns:
/// bin_lo,bin_hi,count with quantiles in leading comment lines.
void save_edge_csv(const std::string& path, const Eigen::Ref<const Mat>& points,
                   const EdgeReport& report);
void save_histogram_csv(const std::string& path, const LaplacianHistogram& hist);

}  // namespace epsdf
