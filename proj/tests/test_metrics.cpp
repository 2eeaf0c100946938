#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "epsdf/metrics.hpp"
#include "support/shapes.hpp"

using namespace epsdf;

namespace {

Mat random_points(Index n, int dim, Rng& rng, double scale = 1.0) {
  Mat pts(n, dim);
  for (Index i = 0; i < pts.size(); ++i) pts.data()[i] = scale * rng.normal();
  return pts;
}

double brute_chamfer(const Mat& a, const Mat& b) {
  auto directed = [](const Mat& from, const Mat& to) {
    double sum = 0.0;
    for (Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < to.rows(); ++j)
        best = std::min(best, (from.row(i) - to.row(j)).norm());
      sum += best;
    }
    return sum / double(from.rows());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

double brute_hausdorff(const Mat& a, const Mat& b) {
  auto directed = [](const Mat& from, const Mat& to) {
    double worst = 0.0;
    for (Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < to.rows(); ++j)
        best = std::min(best, (from.row(i) - to.row(j)).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

EdgePr brute_pr(const Mat& pred, const Mat& gt, double radius) {
  auto matched = [radius](const Mat& from, const Mat& to) {
    Index count = 0;
    for (Index i = 0; i < from.rows(); ++i) {
      for (Index j = 0; j < to.rows(); ++j) {
        if ((from.row(i) - to.row(j)).norm() <= radius) {
          ++count;
          break;
        }
      }
    }
    return count;
  };
  const Index tp = matched(pred, gt);
  const Index hit_gt = matched(gt, pred);
  EdgePr out;
  out.precision = double(tp) / double(pred.rows());
  out.recall = double(hit_gt) / double(gt.rows());
  out.iou = double(tp) / double(pred.rows() - tp + gt.rows() - hit_gt + tp);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("kd-tree agrees with brute force on nearest queries") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = trial % 2 ? 2 : 3;
    const Index n = 1 + Index(rng.below(500));
    const Mat pts = random_points(n, dim, rng);
    const KdTree tree(pts);
    for (int q = 0; q < 20; ++q) {
      const Vec query = random_points(1, dim, rng, 1.5).row(0).transpose();
      double fast = 0.0;
      tree.nearest(query, &fast);
      double brute = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < n; ++j)
        brute = std::min(brute, (pts.row(j).transpose() - query).norm());
      CHECK(fast == doctest::Approx(brute).epsilon(1e-12));
    }
  }
}

TEST_CASE("kd-tree k-nearest matches a brute-force sort") {
  Rng rng(2);
  const Mat pts = random_points(200, 3, rng);
  const KdTree tree(pts);
  for (int q = 0; q < 10; ++q) {
    const Vec query = random_points(1, 3, rng).row(0).transpose();
    const auto fast = tree.k_nearest(query, 7);
    std::vector<std::pair<double, Index>> all;
    for (Index j = 0; j < pts.rows(); ++j)
      all.emplace_back((pts.row(j).transpose() - query).norm(), j);
    std::sort(all.begin(), all.end());
    REQUIRE(fast.size() == 7);
    for (int k = 0; k < 7; ++k) CHECK(fast[std::size_t(k)] == all[std::size_t(k)].second);
  }
}

TEST_CASE("chamfer of identical sets is zero") {
  Rng rng(3);
  const Mat a = random_points(50, 3, rng);
  CHECK(chamfer(a, a) == 0.0);
  CHECK(hausdorff(a, a) == 0.0);
}

TEST_CASE("chamfer and hausdorff hand examples") {
  Mat a(1, 3), b(1, 3);
  a << 0, 0, 0;
  b << 1, 0, 0;
  CHECK(chamfer(a, b) == doctest::Approx(1.0));
  Mat a2(2, 3);
  a2 << 0, 0, 0, 2, 0, 0;
  CHECK(hausdorff(a2, a) == doctest::Approx(2.0));
  Mat empty(0, 3);
  CHECK_THROWS_AS(chamfer(empty, b), ConfigError);
  CHECK_THROWS_AS(hausdorff(empty, b), ConfigError);
}

TEST_CASE("accelerated metrics equal brute force on random instances") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = trial % 2 ? 2 : 3;
    const Index na = 2 + Index(rng.below(120));
    const Index nb = 2 + Index(rng.below(120));
    const Mat a = random_points(na, dim, rng);
    const Mat b = random_points(nb, dim, rng);
    CHECK(std::abs(chamfer(a, b) - brute_chamfer(a, b)) < 1e-12);
    CHECK(std::abs(hausdorff(a, b) - brute_hausdorff(a, b)) < 1e-12);
  }
}

TEST_CASE("metric symmetry") {
  Rng rng(5);
  const Mat a = random_points(80, 3, rng);
  const Mat b = random_points(60, 3, rng);
  CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-15));
  CHECK(hausdorff(a, b) == doctest::Approx(hausdorff(b, a)).epsilon(1e-15));
  CHECK(hausdorff(a, b) >= chamfer(a, b));
}

TEST_CASE("rigid motions leave the distances unchanged") {
  Rng rng(6);
  const Mat a = random_points(60, 3, rng);
  const Mat b = random_points(70, 3, rng);
  // rotation from a normalized quaternion-free construction: Householder of
  // a random direction composed with a coordinate cycle
  const Vec u = testing::random_direction(3, rng);
  Mat rot = Mat::Identity(3, 3) - 2.0 * u * u.transpose();
  Mat cycle = Mat::Zero(3, 3);
  cycle(0, 1) = 1.0;
  cycle(1, 2) = 1.0;
  cycle(2, 0) = 1.0;
  rot = rot * cycle;
  const Eigen::RowVector3d shift(0.3, -1.1, 0.7);

  Mat ra = a * rot.transpose();
  ra.rowwise() += shift;
  Mat rb = b * rot.transpose();
  rb.rowwise() += shift;
  CHECK(std::abs(chamfer(ra, rb) - chamfer(a, b)) < 1e-9);
  CHECK(std::abs(hausdorff(ra, rb) - hausdorff(a, b)) < 1e-9);
}

TEST_CASE("normal angle error") {
  Rng rng(7);
  Mat n(4, 3);
  for (Index i = 0; i < 4; ++i) n.row(i) = testing::random_direction(3, rng).transpose();
  // acos amplifies unit-norm rounding to ~1e-8 near zero angle
  CHECK(normal_angle_error(n, n) < 1e-7);
  CHECK(normal_angle_error(-n, n) < 1e-7);  // sign-invariant
  CHECK(normal_angle_error(-n, n, false) == doctest::Approx(M_PI));
  Mat e1(1, 3), e2(1, 3);
  e1 << 1, 0, 0;
  e2 << 0, 1, 0;
  CHECK(normal_angle_error(e1, e2) == doctest::Approx(M_PI / 2.0));
  Mat bad(2, 3);
  CHECK_THROWS_AS(normal_angle_error(e1, bad), ConfigError);
}

TEST_CASE("edge precision/recall/iou") {
  Rng rng(8);
  const Mat gt = random_points(40, 3, rng);
  SUBCASE("perfect prediction") {
    const EdgePr pr = edge_pr_iou(gt, gt, 0.01);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
    CHECK(pr.iou == 1.0);
  }
  SUBCASE("disjoint prediction") {
    Mat far = gt;
    far.array() += 100.0;
    const EdgePr pr = edge_pr_iou(far, gt, 0.5);
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
    CHECK(pr.iou == 0.0);
  }
  SUBCASE("random instances match brute force exactly") {
    for (int trial = 0; trial < 10; ++trial) {
      const Mat pred = random_points(2 + Index(rng.below(60)), 3, rng, 0.8);
      const Mat truth = random_points(2 + Index(rng.below(60)), 3, rng, 0.8);
      const EdgePr fast = edge_pr_iou(pred, truth, 0.35);
      const EdgePr brute = brute_pr(pred, truth, 0.35);
      CHECK(fast.precision == brute.precision);
      CHECK(fast.recall == brute.recall);
      CHECK(fast.iou == brute.iou);
    }
  }
  SUBCASE("empty ground truth errors, empty prediction scores zero") {
    Mat empty(0, 3);
    CHECK_THROWS_AS(edge_pr_iou(gt, empty, 0.1), ConfigError);
    const EdgePr pr = edge_pr_iou(empty, gt, 0.1);
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
    CHECK(pr.iou == 0.0);
  }
}

TEST_CASE("edge chamfer mirrors chamfer") {
  Rng rng(9);
  const Mat a = random_points(30, 3, rng);
  const Mat b = random_points(25, 3, rng);
  CHECK(edge_chamfer(a, b) == chamfer(a, b));
  CHECK(edge_chamfer(a, a) == 0.0);
  Mat single(1, 3), shifted(1, 3);
  single << 0, 0, 0;
  shifted << 1, 0, 0;
  CHECK(edge_chamfer(single, shifted) == doctest::Approx(1.0));
  Mat empty(0, 3);
  CHECK_THROWS_AS(edge_chamfer(empty, b), ConfigError);
}

TEST_CASE("report files carry the fixed columns") {
  MetricReport report;
  report.chamfer_mean = 0.01;
  report.hausdorff = 0.05;
  save_report_csv("report_out.csv", report);
  {
    std::ifstream is("report_out.csv");
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    CHECK(header == "chamfer,hausdorff,angle_mean,edge_precision,edge_recall,edge_iou,ecd");
    CHECK(row.rfind("0.01,0.05,,", 0) == 0);
  }
  std::remove("report_out.csv");
  const std::string text = format_report(report);
  CHECK(text.find("chamfer") != std::string::npos);
  CHECK(text.find("n/a") != std::string::npos);
}

TEST_SUITE_END();
