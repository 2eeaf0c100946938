#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epsdf/mesh.hpp"
#include "epsdf/types.hpp"

namespace epsdf {

/// Axis-aligned bounding box.
struct Bbox {
  Vec min, max;

  int dim() const { return int(min.size()); }
  Vec extent() const { return max - min; }
  Vec center() const { return 0.5 * (min + max); }

  /// Box grown symmetrically about its center by `factor`.
  Bbox scaled(double factor) const {
    const Vec c = center();
    const Vec half = 0.5 * factor * extent();
    return {c - half, c + half};
  }

  bool contains(const Eigen::Ref<const Vec>& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  static Bbox of_points(const Eigen::Ref<const Mat>& points);
};

/// Similarity transform applied by normalize(): normalized = (p - centroid) / scale.
struct NormalizationRecord {
  Vec centroid;
  double scale = 1.0;

  bool is_identity() const { return scale == 1.0 && (centroid.size() == 0 || centroid.isZero(0.0)); }
};

/// N points in d dimensions with optional unit normals and edge labels.
struct PointCloud {
  Mat points;                            // (n x d)
  Mat normals;                           // (n x d) or empty
  std::vector<std::uint8_t> edge_labels; // size n or empty
  NormalizationRecord norm;

  Index size() const { return points.rows(); }
  int dim() const { return int(points.cols()); }
  bool has_normals() const { return normals.rows() == points.rows() && normals.rows() > 0; }
  bool has_labels() const { return Index(edge_labels.size()) == points.rows() && !edge_labels.empty(); }

  /// Throws on empty clouds, NaN/Inf coordinates or non-unit normals.
  void validate() const;
};

enum class CloudFormat { xyz, ply, csv };

/// Loads a point cloud, auto-detecting the format from the extension.
/// xyz: whitespace-separated `x y z [nx ny nz]` (or `x y [nx ny]` in 2D);
/// csv: the same fields comma-separated; ply: ascii or binary_little_endian
/// vertex element with x/y/z and optional nx/ny/nz.
PointCloud load_cloud(const std::string& path);
PointCloud load_cloud(const std::string& path, CloudFormat format);

void save_cloud(const std::string& path, const PointCloud& cloud);
void save_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format);

/// Canonical frame: centroid at the origin, max distance from the origin 1.
/// The inverse mapping is recorded on the result.
PointCloud normalize(const PointCloud& cloud);

/// Maps points back to the original frame of the given record.
Mat denormalize(const Eigen::Ref<const Mat>& points, const NormalizationRecord& norm);

/// Maps original-frame points into the normalized frame of the record.
Mat normalize_with(const Eigen::Ref<const Mat>& points, const NormalizationRecord& norm);

/// Uniform surface sampling: area-weighted face selection plus uniform
/// barycentric coordinates; normals come from face planes. Works for
/// segment meshes (length-weighted) as well.
PointCloud sample_mesh_surface(const TriMesh& mesh, Index count, Rng& rng);

/// Independent per-coordinate Gaussian perturbation; normals and labels
/// carry over unchanged.
PointCloud add_noise(const PointCloud& cloud, double sigma, Rng& rng);

/// Uniform draw of `count` points (without replacement when count <= N),
/// keeping normals and labels aligned.
PointCloud subsample(const PointCloud& cloud, Index count, Rng& rng);

/// Ground-truth sharp edges: either per-point labels (`index,is_edge` rows,
/// aligned to a cloud by index) or standalone edge samples (`x,y,z` rows).
struct EdgeGroundTruth {
  std::vector<std::uint8_t> labels;  // labeled mode
  Mat edge_points;                   // sample mode (n x d)

  bool labeled() const { return !labels.empty(); }
};

EdgeGroundTruth load_edge_ground_truth(const std::string& path);

/// Attaches labeled-mode ground truth to a cloud; throws on count mismatch.
void attach_edge_labels(PointCloud& cloud, const EdgeGroundTruth& gt);

}  // namespace epsdf
