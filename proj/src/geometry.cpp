#include "epsdf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "epsdf/parallel.hpp"
#include "mc_tables.hpp"

namespace epsdf {

namespace {

constexpr Index kChunk = 64;

// low grid corner (offset into the cell) and axis of each cube edge
struct EdgeRef {
  int dx, dy, dz, axis;
};
constexpr EdgeRef kCubeEdges[12] = {
    {0, 0, 0, 0}, {1, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 0, 1},
    {0, 0, 1, 0}, {1, 0, 1, 1}, {0, 1, 1, 0}, {0, 0, 1, 1},
    {0, 0, 0, 2}, {1, 0, 0, 2}, {1, 1, 0, 2}, {0, 1, 0, 2},
};
constexpr int kCubeCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                   {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// 2D edge refs; see mc_tables.hpp for the corner/edge convention
constexpr EdgeRef kSquareEdges[4] = {{0, 0, 0, 0}, {1, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 0, 1}};
constexpr int kSquareCorner[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};

double interpolate_zero(double v0, double v1) {
  const double denom = v0 - v1;
  const double t = denom == 0.0 ? 0.5 : v0 / denom;
  return std::clamp(t, 0.0, 1.0);
}

[[noreturn]] void fault_nonfinite(Index flat, Index samples, int d) {
  Index rem = flat;
  const Index ix = rem % samples;
  rem /= samples;
  const Index iy = rem % samples;
  rem /= samples;
  std::string msg = "extract_isosurface: non-finite field value at grid point (" +
                    std::to_string(ix) + ", " + std::to_string(iy);
  if (d == 3) msg += ", " + std::to_string(rem);
  throw NumericError(msg + ")");
}

TriMesh marching_squares(const Vec& values, const Vec& origin, const Vec& step,
                         Index samples) {
  auto value_at = [&](Index ix, Index iy) { return values[iy * samples + ix]; };
  std::unordered_map<std::uint64_t, int> edge_vertex;
  std::vector<Eigen::Vector2d> vertices;
  std::vector<Eigen::Vector2i> segments;

  auto vertex_on_edge = [&](Index ix, Index iy, int axis) {
    const std::uint64_t key = (std::uint64_t(axis) * std::uint64_t(samples) + iy) *
                                  std::uint64_t(samples) +
                              ix;
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double v0 = value_at(ix, iy);
    const double v1 = axis == 0 ? value_at(ix + 1, iy) : value_at(ix, iy + 1);
    const double t = interpolate_zero(v0, v1);
    Eigen::Vector2d p(origin[0] + double(ix) * step[0], origin[1] + double(iy) * step[1]);
    p[axis] += t * step[axis];
    vertices.push_back(p);
    const int idx = int(vertices.size()) - 1;
    edge_vertex.emplace(key, idx);
    return idx;
  };

  for (Index iy = 0; iy + 1 < samples; ++iy) {
    for (Index ix = 0; ix + 1 < samples; ++ix) {
      int mask = 0;
      for (int c = 0; c < 4; ++c)
        if (value_at(ix + kSquareCorner[c][0], iy + kSquareCorner[c][1]) < 0.0)
          mask |= 1 << c;
      const int* row = mc::kSegTable[mask];
      for (int s = 0; s < 4 && row[s] >= 0; s += 2) {
        const EdgeRef& ea = kSquareEdges[row[s]];
        const EdgeRef& eb = kSquareEdges[row[s + 1]];
        const int a = vertex_on_edge(ix + ea.dx, iy + ea.dy, ea.axis);
        const int b = vertex_on_edge(ix + eb.dx, iy + eb.dy, eb.axis);
        if (a != b) segments.push_back({a, b});
      }
    }
  }

  TriMesh mesh;
  mesh.vertices.resize(Index(vertices.size()), 2);
  for (Index i = 0; i < mesh.vertices.rows(); ++i)
    mesh.vertices.row(i) = vertices[std::size_t(i)].transpose();
  mesh.faces.resize(Index(segments.size()), 2);
  for (Index i = 0; i < mesh.faces.rows(); ++i)
    mesh.faces.row(i) = segments[std::size_t(i)].transpose();
  return mesh;
}

TriMesh marching_cubes(const Vec& values, const Vec& origin, const Vec& step,
                       Index samples) {
  auto value_at = [&](Index ix, Index iy, Index iz) {
    return values[(iz * samples + iy) * samples + ix];
  };
  std::unordered_map<std::uint64_t, int> edge_vertex;
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> triangles;

  auto vertex_on_edge = [&](Index ix, Index iy, Index iz, int axis) {
    const std::uint64_t key =
        ((std::uint64_t(axis) * std::uint64_t(samples) + iz) * std::uint64_t(samples) +
         iy) *
            std::uint64_t(samples) +
        ix;
    const auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double v0 = value_at(ix, iy, iz);
    const double v1 = axis == 0   ? value_at(ix + 1, iy, iz)
                      : axis == 1 ? value_at(ix, iy + 1, iz)
                                  : value_at(ix, iy, iz + 1);
    const double t = interpolate_zero(v0, v1);
    Eigen::Vector3d p(origin[0] + double(ix) * step[0],
                      origin[1] + double(iy) * step[1],
                      origin[2] + double(iz) * step[2]);
    p[axis] += t * step[axis];
    vertices.push_back(p);
    const int idx = int(vertices.size()) - 1;
    edge_vertex.emplace(key, idx);
    return idx;
  };

  for (Index iz = 0; iz + 1 < samples; ++iz) {
    for (Index iy = 0; iy + 1 < samples; ++iy) {
      for (Index ix = 0; ix + 1 < samples; ++ix) {
        int mask = 0;
        for (int c = 0; c < 8; ++c)
          if (value_at(ix + kCubeCorner[c][0], iy + kCubeCorner[c][1],
                       iz + kCubeCorner[c][2]) < 0.0)
            mask |= 1 << c;
        if (mc::kEdgeTable[mask] == 0) continue;
        int on_edge[12];
        for (int e = 0; e < 12; ++e) {
          if (mc::kEdgeTable[mask] & (1 << e)) {
            const EdgeRef& er = kCubeEdges[e];
            on_edge[e] = vertex_on_edge(ix + er.dx, iy + er.dy, iz + er.dz, er.axis);
          }
        }
        const int* row = mc::kTriTable[mask];
        for (int t = 0; t < 16 && row[t] >= 0; t += 3) {
          const int a = on_edge[row[t]];
          const int b = on_edge[row[t + 1]];
          const int c = on_edge[row[t + 2]];
          if (a != b && b != c && a != c) triangles.push_back({a, b, c});
        }
      }
    }
  }

  TriMesh mesh;
  mesh.vertices.resize(Index(vertices.size()), 3);
  for (Index i = 0; i < mesh.vertices.rows(); ++i)
    mesh.vertices.row(i) = vertices[std::size_t(i)].transpose();
  mesh.faces.resize(Index(triangles.size()), 3);
  for (Index i = 0; i < mesh.faces.rows(); ++i)
    mesh.faces.row(i) = triangles[std::size_t(i)].transpose();
  return mesh;
}

Vec laplacians_at(const MlpModel& model, const Eigen::Ref<const Mat>& points) {
  Vec laps(points.rows());
  for_chunks(points.rows(), kChunk, [&](Index begin, Index end, Index, int) {
    for (Index i = begin; i < end; ++i)
      laps[i] = laplacian(eval_jet(model, points.row(i).transpose()));
  });
  return laps;
}

double sorted_quantile(const Vec& sorted, double q) {
  const Index n = sorted.size();
  const Index idx = std::max<Index>(0, Index(std::ceil(q * double(n))) - 1);
  return sorted[std::min(idx, n - 1)];
}

}  // namespace

BatchField field_of(const MlpModel& model) {
  return [model](const Eigen::Ref<const Mat>& points) {
    return forward_many(model, points);
  };
}

TriMesh extract_isosurface(const BatchField& field, const Bbox& bbox, int resolution) {
  if (resolution < 2) throw ConfigError("extract_isosurface: resolution must be >= 2");
  const int d = bbox.dim();
  if (d != 2 && d != 3) throw ConfigError("extract_isosurface: dimension must be 2 or 3");
  const Bbox grid_box = bbox.scaled(1.1);
  const Index samples = resolution + 1;
  const Vec origin = grid_box.min;
  const Vec step = grid_box.extent() / double(resolution);

  const Index total = d == 3 ? samples * samples * samples : samples * samples;
  Vec values(total);
  // evaluate row-by-row so each batch is one contiguous x-run
  const Index rows = total / samples;
  for_chunks(rows, kChunk, [&](Index begin, Index end, Index, int) {
    Mat pts(samples, d);
    for (Index r = begin; r < end; ++r) {
      const Index iy = r % samples;
      const Index iz = d == 3 ? r / samples : 0;
      for (Index ix = 0; ix < samples; ++ix) {
        pts(ix, 0) = origin[0] + double(ix) * step[0];
        pts(ix, 1) = origin[1] + double(iy) * step[1];
        if (d == 3) pts(ix, 2) = origin[2] + double(iz) * step[2];
      }
      values.segment(r * samples, samples) = field(pts);
    }
  });
  if (!values.allFinite()) {
    for (Index i = 0; i < total; ++i)
      if (!std::isfinite(values[i])) fault_nonfinite(i, samples, d);
  }

  TriMesh mesh = d == 3 ? marching_cubes(values, origin, step, samples)
                        : marching_squares(values, origin, step, samples);
  mesh.validate();
  return mesh;
}

Mat estimate_normals(const MlpModel& model, const Eigen::Ref<const Mat>& points,
                     Index* zero_grad_count) {
  if (points.cols() != model.config.input_dim)
    throw ConfigError("estimate_normals: point dimension mismatch");
  Mat normals(points.rows(), points.cols());
  std::vector<Index> zero_counts(std::size_t(plan_workers(num_chunks(points.rows(), kChunk))), 0);
  for_chunks(points.rows(), kChunk, [&](Index begin, Index end, Index, int w) {
    for (Index i = begin; i < end; ++i) {
      const Jet2 jet = eval_jet(model, points.row(i).transpose());
      const double len = jet.grad.norm();
      if (len > 0.0) {
        normals.row(i) = (jet.grad / len).transpose();
      } else {
        normals.row(i).setZero();
        ++zero_counts[std::size_t(w)];
      }
    }
  });
  if (zero_grad_count) {
    *zero_grad_count = 0;
    for (Index c : zero_counts) *zero_grad_count += c;
  }
  return normals;
}

EdgeReport detect_edges(const MlpModel& model, const Eigen::Ref<const Mat>& points,
                        double tau) {
  if (tau <= 0.0) throw ConfigError("detect_edges: tau must be positive");
  if (points.cols() != model.config.input_dim)
    throw ConfigError("detect_edges: point dimension mismatch");
  EdgeReport report;
  report.tau = tau;
  report.laplacian_values = laplacians_at(model, points);
  for (Index i = 0; i < points.rows(); ++i)
    if (std::abs(report.laplacian_values[i]) > tau) report.edge_indices.push_back(i);
  report.edge_points.resize(Index(report.edge_indices.size()), points.cols());
  for (Index k = 0; k < report.edge_points.rows(); ++k)
    report.edge_points.row(k) = points.row(report.edge_indices[std::size_t(k)]);
  return report;
}

LaplacianHistogram laplacian_histogram(const MlpModel& model,
                                       const Eigen::Ref<const Mat>& points, int bins) {
  if (bins < 1) throw ConfigError("laplacian_histogram: bins must be >= 1");
  const Vec magnitudes = laplacians_at(model, points).cwiseAbs();
  LaplacianHistogram hist;
  hist.total = magnitudes.size();
  hist.counts = Eigen::VectorXi::Zero(bins);
  const double max = magnitudes.maxCoeff();
  hist.bin_width = max > 0.0 ? max / double(bins) : 0.0;
  for (Index i = 0; i < magnitudes.size(); ++i) {
    const int b = hist.bin_width == 0.0
                      ? 0
                      : std::min(bins - 1, int(magnitudes[i] / hist.bin_width));
    ++hist.counts[b];
  }
  Vec sorted = magnitudes;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  hist.q50 = sorted_quantile(sorted, 0.50);
  hist.q90 = sorted_quantile(sorted, 0.90);
  hist.q99 = sorted_quantile(sorted, 0.99);
  return hist;
}

void save_edge_csv(const std::string& path, const Eigen::Ref<const Mat>& points,
                   const EdgeReport& report) {
  if (points.rows() != report.laplacian_values.size())
    throw ConfigError("save_edge_csv: point/report mismatch");
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.precision(12);
  const int d = int(points.cols());
  os << (d == 3 ? "index,x,y,z,abs_laplacian" : "index,x,y,abs_laplacian") << '\n';
  for (Index i : report.edge_indices) {
    os << i;
    for (int k = 0; k < d; ++k) os << ',' << points(i, k);
    os << ',' << std::abs(report.laplacian_values[i]) << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

void save_histogram_csv(const std::string& path, const LaplacianHistogram& hist) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.precision(12);
  os << "# quantiles q50=" << hist.q50 << " q90=" << hist.q90 << " q99=" << hist.q99
     << '\n';
  os << "# total=" << hist.total << '\n';
  os << "bin_lo,bin_hi,count\n";
  for (Index b = 0; b < hist.counts.size(); ++b) {
    os << double(b) * hist.bin_width << ',' << double(b + 1) * hist.bin_width << ','
       << hist.counts[b] << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace epsdf
