#pragma once

#include <limits>
#include <string>
#include <vector>

#include "epsdf/types.hpp"

namespace epsdf {

/// Median-split kd-tree over the rows of a point matrix. Used to accelerate
/// the nearest-neighbor queries behind every distance metric; brute force
/// stays in the tests as the oracle.
class KdTree {
 public:
  explicit KdTree(const Mat& points);

  Index size() const { return points_.rows(); }
  int dim() const { return int(points_.cols()); }

  /// Index of the closest point to q; *dist receives the distance.
  Index nearest(const Eigen::Ref<const Vec>& q, double* dist = nullptr) const;

  /// Indices of the k closest points, ordered by (distance, index).
  std::vector<Index> k_nearest(const Eigen::Ref<const Vec>& q, int k) const;

  bool any_within(const Eigen::Ref<const Vec>& q, double radius) const;

 private:
  struct Node {
    double split = 0.0;
    int axis = -1;          // -1 marks a leaf
    Index left = -1, right = -1;
    Index begin = 0, end = 0;  // leaf range into order_
  };

  Index build(Index begin, Index end);

  Mat points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  Index root_ = -1;

  static constexpr Index kLeafSize = 16;
};

/// Two-sided Chamfer distance: half the sum of the two mean nearest-neighbor
/// distances (Euclidean, unsquared).
double chamfer(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b);

/// Symmetric Hausdorff distance: max of the two directed max-min distances.
double hausdorff(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b);

/// Mean angle (radians) between matched unit normals. Orientation-invariant
/// by default since nothing in the pipeline supervises sign.
double normal_angle_error(const Eigen::Ref<const Mat>& pred,
                          const Eigen::Ref<const Mat>& gt,
                          bool orient_invariant = true);

struct EdgePr {
  double precision = 0.0;
  double recall = 0.0;
  double iou = 0.0;
};

/// Point-matching precision/recall/IoU: a prediction is a true positive when
/// some ground-truth edge point lies within match_radius; recall counts
/// ground-truth points matched by predictions; IoU = TP/(TP+FP+FN).
EdgePr edge_pr_iou(const Eigen::Ref<const Mat>& pred_edges,
                   const Eigen::Ref<const Mat>& gt_edges, double match_radius);

/// Chamfer distance restricted to edge point sets.
double edge_chamfer(const Eigen::Ref<const Mat>& pred_edges,
                    const Eigen::Ref<const Mat>& gt_edges);

/// k nearest neighbors (excluding the point itself) for every row.
std::vector<std::vector<int>> knn_table(const Mat& points, int k);

/// Full evaluation record; NaN marks metrics that were not computed.
struct MetricReport {
  double chamfer_mean = std::numeric_limits<double>::quiet_NaN();
  double hausdorff = std::numeric_limits<double>::quiet_NaN();
  double angle_mean = std::numeric_limits<double>::quiet_NaN();
  double edge_precision = std::numeric_limits<double>::quiet_NaN();
  double edge_recall = std::numeric_limits<double>::quiet_NaN();
  double edge_iou = std::numeric_limits<double>::quiet_NaN();
  double ecd = std::numeric_limits<double>::quiet_NaN();
};

/// One header row plus one value row; missing metrics are empty cells.
void save_report_csv(const std::string& path, const MetricReport& report);
void save_report_text(const std::string& path, const MetricReport& report);
std::string format_report(const MetricReport& report);

}  // namespace epsdf
