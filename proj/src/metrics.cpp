#include "epsdf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

namespace epsdf {

KdTree::KdTree(const Mat& points) : points_(points) {
  if (points_.rows() == 0) throw ConfigError("KdTree: empty point set");
  if (!points_.allFinite()) throw NumericError("KdTree: non-finite coordinate");
  order_.resize(std::size_t(points_.rows()));
  std::iota(order_.begin(), order_.end(), Index(0));
  nodes_.reserve(std::size_t(2 * points_.rows() / kLeafSize + 2));
  root_ = build(0, points_.rows());
}

Index KdTree::build(Index begin, Index end) {
  Node node;
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) {
    nodes_.push_back(node);
    return Index(nodes_.size()) - 1;
  }
  // split the widest axis at the median
  Vec lo = points_.row(order_[std::size_t(begin)]).transpose();
  Vec hi = lo;
  for (Index i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_.row(order_[std::size_t(i)]).transpose());
    hi = hi.cwiseMax(points_.row(order_[std::size_t(i)]).transpose());
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const Index mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Index a, Index b) { return points_(a, axis) < points_(b, axis); });
  node.axis = axis;
  node.split = points_(order_[std::size_t(mid)], axis);
  const Index self = Index(nodes_.size());
  nodes_.push_back(node);
  const Index left = build(begin, mid);
  const Index right = build(mid, end);
  nodes_[std::size_t(self)].left = left;
  nodes_[std::size_t(self)].right = right;
  return self;
}

Index KdTree::nearest(const Eigen::Ref<const Vec>& q, double* dist) const {
  if (q.size() != points_.cols()) throw ConfigError("KdTree: query dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  Index best_idx = -1;
  // explicit stack of (node, distance to its half-space)
  std::vector<std::pair<Index, double>> stack;
  stack.emplace_back(root_, 0.0);
  while (!stack.empty()) {
    const auto [ni, lower] = stack.back();
    stack.pop_back();
    if (lower >= best) continue;
    const Node& node = nodes_[std::size_t(ni)];
    if (node.axis < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        const Index p = order_[std::size_t(i)];
        const double d = (points_.row(p).transpose() - q).norm();
        if (d < best || (d == best && p < best_idx)) {
          best = d;
          best_idx = p;
        }
      }
      continue;
    }
    const double delta = q[node.axis] - node.split;
    const Index near = delta < 0.0 ? node.left : node.right;
    const Index far = delta < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(lower, std::abs(delta)));
    stack.emplace_back(near, lower);
  }
  if (dist) *dist = best;
  return best_idx;
}

std::vector<Index> KdTree::k_nearest(const Eigen::Ref<const Vec>& q, int k) const {
  if (q.size() != points_.cols()) throw ConfigError("KdTree: query dimension mismatch");
  if (k < 1) throw ConfigError("KdTree: k must be positive");
  k = int(std::min<Index>(k, points_.rows()));
  using Entry = std::pair<double, Index>;
  std::priority_queue<Entry> heap;  // largest distance on top
  std::vector<std::pair<Index, double>> stack;
  stack.emplace_back(root_, 0.0);
  while (!stack.empty()) {
    const auto [ni, lower] = stack.back();
    stack.pop_back();
    if (int(heap.size()) == k && lower >= heap.top().first) continue;
    const Node& node = nodes_[std::size_t(ni)];
    if (node.axis < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        const Index p = order_[std::size_t(i)];
        const double d = (points_.row(p).transpose() - q).norm();
        if (int(heap.size()) < k) {
          heap.emplace(d, p);
        } else if (Entry(d, p) < heap.top()) {
          heap.pop();
          heap.emplace(d, p);
        }
      }
      continue;
    }
    const double delta = q[node.axis] - node.split;
    const Index near = delta < 0.0 ? node.left : node.right;
    const Index far = delta < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(lower, std::abs(delta)));
    stack.emplace_back(near, lower);
  }
  std::vector<Entry> entries;
  entries.reserve(heap.size());
  while (!heap.empty()) {
    entries.push_back(heap.top());
    heap.pop();
  }
  std::sort(entries.begin(), entries.end());
  std::vector<Index> out;
  out.reserve(entries.size());
  for (const auto& [d, p] : entries) out.push_back(p);
  return out;
}

bool KdTree::any_within(const Eigen::Ref<const Vec>& q, double radius) const {
  if (q.size() != points_.cols()) throw ConfigError("KdTree: query dimension mismatch");
  std::vector<std::pair<Index, double>> stack;
  stack.emplace_back(root_, 0.0);
  while (!stack.empty()) {
    const auto [ni, lower] = stack.back();
    stack.pop_back();
    if (lower > radius) continue;
    const Node& node = nodes_[std::size_t(ni)];
    if (node.axis < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        if ((points_.row(order_[std::size_t(i)]).transpose() - q).norm() <= radius)
          return true;
      }
      continue;
    }
    const double delta = q[node.axis] - node.split;
    const Index near = delta < 0.0 ? node.left : node.right;
    const Index far = delta < 0.0 ? node.right : node.left;
    stack.emplace_back(far, std::max(lower, std::abs(delta)));
    stack.emplace_back(near, lower);
  }
  return false;
}

namespace {

void require_sets(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b,
                  const char* who) {
  if (a.rows() == 0 || b.rows() == 0)
    throw ConfigError(std::string(who) + ": empty point set");
  if (a.cols() != b.cols())
    throw ConfigError(std::string(who) + ": dimension mismatch");
}

/// mean and max nearest-neighbor distance from each row of `from` to `tree`
std::pair<double, double> directed_stats(const Eigen::Ref<const Mat>& from,
                                         const KdTree& tree) {
  double sum = 0.0, worst = 0.0;
  for (Index i = 0; i < from.rows(); ++i) {
    double d = 0.0;
    tree.nearest(from.row(i).transpose(), &d);
    sum += d;
    worst = std::max(worst, d);
  }
  return {sum / double(from.rows()), worst};
}

}  // namespace

double chamfer(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b) {
  require_sets(a, b, "chamfer");
  const KdTree ta(a), tb(b);
  return 0.5 * (directed_stats(a, tb).first + directed_stats(b, ta).first);
}

double hausdorff(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b) {
  require_sets(a, b, "hausdorff");
  const KdTree ta(a), tb(b);
  return std::max(directed_stats(a, tb).second, directed_stats(b, ta).second);
}

double normal_angle_error(const Eigen::Ref<const Mat>& pred,
                          const Eigen::Ref<const Mat>& gt, bool orient_invariant) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw ConfigError("normal_angle_error: count mismatch");
  if (pred.rows() == 0) throw ConfigError("normal_angle_error: empty input");
  double sum = 0.0;
  for (Index i = 0; i < pred.rows(); ++i) {
    double dot = pred.row(i).dot(gt.row(i));
    if (orient_invariant) dot = std::abs(dot);
    sum += std::acos(std::clamp(dot, -1.0, 1.0));
  }
  return sum / double(pred.rows());
}

EdgePr edge_pr_iou(const Eigen::Ref<const Mat>& pred_edges,
                   const Eigen::Ref<const Mat>& gt_edges, double match_radius) {
  if (match_radius <= 0.0) throw ConfigError("edge_pr_iou: match_radius must be positive");
  if (gt_edges.rows() == 0) throw ConfigError("edge_pr_iou: empty ground truth");
  if (pred_edges.rows() == 0) return {0.0, 0.0, 0.0};
  if (pred_edges.cols() != gt_edges.cols())
    throw ConfigError("edge_pr_iou: dimension mismatch");

  const KdTree gt_tree(gt_edges), pred_tree(pred_edges);
  Index tp = 0;
  for (Index i = 0; i < pred_edges.rows(); ++i)
    tp += gt_tree.any_within(pred_edges.row(i).transpose(), match_radius);
  Index matched_gt = 0;
  for (Index i = 0; i < gt_edges.rows(); ++i)
    matched_gt += pred_tree.any_within(gt_edges.row(i).transpose(), match_radius);

  const Index fp = pred_edges.rows() - tp;
  const Index fn = gt_edges.rows() - matched_gt;
  EdgePr out;
  out.precision = double(tp) / double(pred_edges.rows());
  out.recall = double(matched_gt) / double(gt_edges.rows());
  out.iou = double(tp) / double(tp + fp + fn);
  return out;
}

double edge_chamfer(const Eigen::Ref<const Mat>& pred_edges,
                    const Eigen::Ref<const Mat>& gt_edges) {
  require_sets(pred_edges, gt_edges, "edge_chamfer");
  return chamfer(pred_edges, gt_edges);
}

std::vector<std::vector<int>> knn_table(const Mat& points, int k) {
  if (k < 1) throw ConfigError("knn_table: k must be positive");
  if (Index(k) > points.rows() - 1)
    throw ConfigError("knn_table: k exceeds point count - 1");
  const KdTree tree(points);
  std::vector<std::vector<int>> table(std::size_t(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    const auto found = tree.k_nearest(points.row(i).transpose(), k + 1);
    auto& nei = table[std::size_t(i)];
    nei.reserve(std::size_t(k));
    for (Index j : found) {
      if (j == i) continue;
      if (int(nei.size()) == k) break;
      nei.push_back(int(j));
    }
  }
  return table;
}

namespace {

const char* kReportColumns =
    "chamfer,hausdorff,angle_mean,edge_precision,edge_recall,edge_iou,ecd";

std::string cell(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

}  // namespace

void save_report_csv(const std::string& path, const MetricReport& r) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << kReportColumns << '\n';
  os << cell(r.chamfer_mean) << ',' << cell(r.hausdorff) << ',' << cell(r.angle_mean)
     << ',' << cell(r.edge_precision) << ',' << cell(r.edge_recall) << ','
     << cell(r.edge_iou) << ',' << cell(r.ecd) << '\n';
  if (!os) throw IoError("write failed for '" + path + "'");
}

std::string format_report(const MetricReport& r) {
  std::ostringstream ss;
  ss.precision(6);
  auto row = [&ss](const char* name, double v) {
    ss << name << ": ";
    if (std::isnan(v)) ss << "n/a";
    else ss << v;
    ss << '\n';
  };
  row("chamfer distance   ", r.chamfer_mean);
  row("hausdorff distance ", r.hausdorff);
  row("normal angle (rad) ", r.angle_mean);
  row("edge precision     ", r.edge_precision);
  row("edge recall        ", r.edge_recall);
  row("edge IoU           ", r.edge_iou);
  row("edge chamfer (ECD) ", r.ecd);
  return ss.str();
}

void save_report_text(const std::string& path, const MetricReport& r) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << format_report(r);
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace epsdf
