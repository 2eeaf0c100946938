#include "epsdf/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ply_detail.hpp"

namespace epsdf {

namespace {

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return ext;
}

std::vector<double> parse_fields(const std::string& line, bool csv, bool* ok) {
  std::string work = line;
  if (csv) std::replace(work.begin(), work.end(), ',', ' ');
  std::istringstream ss(work);
  std::vector<double> fields;
  double v;
  *ok = true;
  while (ss >> v) fields.push_back(v);
  std::string rest;
  if (ss.fail() && !ss.eof() && ss >> rest) *ok = false;
  return fields;
}

void renormalize_normals(Mat& normals, const std::string& path) {
  for (Index i = 0; i < normals.rows(); ++i) {
    const double len = normals.row(i).norm();
    if (len <= 0.0 || !std::isfinite(len))
      throw IoError(path + ": zero or non-finite normal at row " + std::to_string(i + 1));
    normals.row(i) /= len;
  }
}

PointCloud load_cloud_text(const std::string& path, bool csv) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  Index lineno = 0;
  int width = -1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || line[first] == '#') continue;
    bool ok = false;
    std::vector<double> fields = parse_fields(line, csv, &ok);
    if (!ok || fields.empty())
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed line");
    if (width < 0) {
      width = int(fields.size());
      if (width != 2 && width != 3 && width != 4 && width != 6)
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": expected 2, 3, 4 or 6 fields per line");
    } else if (int(fields.size()) != width) {
      throw IoError(path + ":" + std::to_string(lineno) + ": inconsistent field count");
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw IoError(path + ": no points");

  // 2 -> 2D, 3 -> 3D, 4 -> 2D with normals, 6 -> 3D with normals
  const int d = (width == 2 || width == 4) ? 2 : 3;
  const bool with_normals = width == 2 * d;
  PointCloud cloud;
  cloud.points.resize(Index(rows.size()), d);
  if (with_normals) cloud.normals.resize(Index(rows.size()), d);
  for (Index i = 0; i < cloud.points.rows(); ++i) {
    for (int k = 0; k < d; ++k) cloud.points(i, k) = rows[std::size_t(i)][std::size_t(k)];
    if (with_normals)
      for (int k = 0; k < d; ++k)
        cloud.normals(i, k) = rows[std::size_t(i)][std::size_t(d + k)];
  }
  if (with_normals) renormalize_normals(cloud.normals, path);
  cloud.validate();
  return cloud;
}

PointCloud load_cloud_ply(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  const ply::Header header = ply::parse_header(is, path);
  PointCloud cloud;
  bool seen_vertex = false;
  for (const auto& el : header.elements) {
    if (el.name != "vertex") {
      for (Index i = 0; i < el.count; ++i) {
        for (const auto& prop : el.props) {
          if (prop.is_list) {
            const int n = int(ply::read_scalar(is, prop.count_type, header.binary, path));
            for (int k = 0; k < n; ++k) ply::read_scalar(is, prop.type, header.binary, path);
          } else {
            ply::read_scalar(is, prop.type, header.binary, path);
          }
        }
      }
      continue;
    }
    seen_vertex = true;
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
    for (std::size_t p = 0; p < el.props.size(); ++p) {
      if (el.props[p].is_list) throw IoError(path + ": list property on vertices");
      const std::string& name = el.props[p].name;
      if (name == "x") ix = int(p);
      else if (name == "y") iy = int(p);
      else if (name == "z") iz = int(p);
      else if (name == "nx") inx = int(p);
      else if (name == "ny") iny = int(p);
      else if (name == "nz") inz = int(p);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw IoError(path + ": vertex element missing x/y/z");
    const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;
    cloud.points.resize(el.count, 3);
    if (with_normals) cloud.normals.resize(el.count, 3);
    std::vector<double> row(el.props.size());
    for (Index i = 0; i < el.count; ++i) {
      for (std::size_t p = 0; p < el.props.size(); ++p)
        row[p] = ply::read_scalar(is, el.props[p].type, header.binary, path);
      cloud.points.row(i) << row[std::size_t(ix)], row[std::size_t(iy)], row[std::size_t(iz)];
      if (with_normals)
        cloud.normals.row(i) << row[std::size_t(inx)], row[std::size_t(iny)],
            row[std::size_t(inz)];
    }
  }
  if (!seen_vertex || cloud.points.rows() == 0) throw IoError(path + ": no points");
  if (cloud.normals.rows() > 0) renormalize_normals(cloud.normals, path);
  cloud.validate();
  return cloud;
}

}  // namespace

Bbox Bbox::of_points(const Eigen::Ref<const Mat>& points) {
  if (points.rows() == 0) throw ConfigError("Bbox: empty point set");
  return {points.colwise().minCoeff().transpose(),
          points.colwise().maxCoeff().transpose()};
}

void PointCloud::validate() const {
  if (points.rows() < 1) throw ConfigError("PointCloud: empty");
  if (dim() != 2 && dim() != 3) throw ConfigError("PointCloud: dimension must be 2 or 3");
  if (!points.allFinite()) throw NumericError("PointCloud: non-finite coordinate");
  if (normals.rows() > 0) {
    if (normals.rows() != points.rows() || normals.cols() != points.cols())
      throw ConfigError("PointCloud: normal shape mismatch");
    if (!normals.allFinite()) throw NumericError("PointCloud: non-finite normal");
    for (Index i = 0; i < normals.rows(); ++i) {
      const double len = normals.row(i).norm();
      // exactly-zero rows mark points where no normal is defined
      if (len != 0.0 && std::abs(len - 1.0) > 1e-6)
        throw ConfigError("PointCloud: non-unit normal at row " + std::to_string(i + 1));
    }
  }
  if (!edge_labels.empty() && Index(edge_labels.size()) != points.rows())
    throw ConfigError("PointCloud: edge label count mismatch");
}

PointCloud load_cloud(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "xyz" || ext == "txt") return load_cloud(path, CloudFormat::xyz);
  if (ext == "ply") return load_cloud(path, CloudFormat::ply);
  if (ext == "csv") return load_cloud(path, CloudFormat::csv);
  throw IoError("unsupported cloud extension '" + ext + "' for '" + path + "'");
}

PointCloud load_cloud(const std::string& path, CloudFormat format) {
  switch (format) {
    case CloudFormat::xyz: return load_cloud_text(path, false);
    case CloudFormat::csv: return load_cloud_text(path, true);
    case CloudFormat::ply: return load_cloud_ply(path);
  }
  throw ConfigError("load_cloud: bad format");
}

void save_cloud(const std::string& path, const PointCloud& cloud) {
  const std::string ext = lower_ext(path);
  if (ext == "xyz" || ext == "txt") return save_cloud(path, cloud, CloudFormat::xyz);
  if (ext == "ply") return save_cloud(path, cloud, CloudFormat::ply);
  if (ext == "csv") return save_cloud(path, cloud, CloudFormat::csv);
  throw IoError("unsupported cloud extension '" + ext + "' for '" + path + "'");
}

void save_cloud(const std::string& path, const PointCloud& cloud, CloudFormat format) {
  cloud.validate();
  if (format == CloudFormat::ply) {
    if (cloud.dim() != 3) throw ConfigError("save_cloud: PLY clouds must be 3D");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "ply\nformat binary_little_endian 1.0\n";
    os << "element vertex " << cloud.size() << '\n';
    os << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_normals())
      os << "property double nx\nproperty double ny\nproperty double nz\n";
    os << "end_header\n";
    auto put = [&os](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
    for (Index i = 0; i < cloud.size(); ++i) {
      for (int k = 0; k < 3; ++k) put(cloud.points(i, k));
      if (cloud.has_normals())
        for (int k = 0; k < 3; ++k) put(cloud.normals(i, k));
    }
    if (!os) throw IoError("write failed for '" + path + "'");
    return;
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.precision(17);
  const char sep = format == CloudFormat::csv ? ',' : ' ';
  for (Index i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < cloud.dim(); ++k) {
      if (k) os << sep;
      os << cloud.points(i, k);
    }
    if (cloud.has_normals())
      for (int k = 0; k < cloud.dim(); ++k) os << sep << cloud.normals(i, k);
    os << '\n';
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

PointCloud normalize(const PointCloud& cloud) {
  cloud.validate();
  PointCloud out = cloud;
  const Vec centroid = cloud.points.colwise().mean().transpose();
  out.points.rowwise() -= centroid.transpose();
  const double scale = out.points.rowwise().norm().maxCoeff();
  if (scale <= 0.0)
    throw ConfigError("normalize: all points identical (degenerate scale)");
  out.points /= scale;
  // compose with any existing record so denormalize always restores the
  // original frame
  const NormalizationRecord& prev = cloud.norm;
  if (prev.centroid.size() == 0) {
    out.norm = {centroid, scale};
  } else {
    out.norm = {prev.centroid + prev.scale * centroid, prev.scale * scale};
  }
  return out;
}

Mat denormalize(const Eigen::Ref<const Mat>& points, const NormalizationRecord& norm) {
  if (norm.centroid.size() == 0) return points;
  Mat out = points * norm.scale;
  out.rowwise() += norm.centroid.transpose();
  return out;
}

Mat normalize_with(const Eigen::Ref<const Mat>& points, const NormalizationRecord& norm) {
  if (norm.centroid.size() == 0) return points;
  Mat out = points;
  out.rowwise() -= norm.centroid.transpose();
  return out / norm.scale;
}

PointCloud sample_mesh_surface(const TriMesh& mesh, Index count, Rng& rng) {
  mesh.validate();
  if (mesh.num_faces() == 0) throw ConfigError("sample_mesh_surface: mesh has no faces");
  if (count < 1) throw ConfigError("sample_mesh_surface: count must be positive");
  const int d = mesh.dim();
  const Index m = mesh.num_faces();

  Vec measure(m);     // triangle area or segment length
  Mat face_normal(m, d);
  for (Index f = 0; f < m; ++f) {
    if (d == 3) {
      const Eigen::Vector3d a = mesh.vertices.row(mesh.faces(f, 0));
      const Eigen::Vector3d b = mesh.vertices.row(mesh.faces(f, 1));
      const Eigen::Vector3d c = mesh.vertices.row(mesh.faces(f, 2));
      const Eigen::Vector3d n = (b - a).cross(c - a);
      measure[f] = 0.5 * n.norm();
      face_normal.row(f) = measure[f] > 0.0 ? (n / n.norm()).transpose().eval()
                                            : Eigen::RowVector3d::Zero().eval();
    } else {
      const Eigen::Vector2d a = mesh.vertices.row(mesh.faces(f, 0));
      const Eigen::Vector2d b = mesh.vertices.row(mesh.faces(f, 1));
      const Eigen::Vector2d t = b - a;
      measure[f] = t.norm();
      face_normal.row(f) = measure[f] > 0.0
                               ? Eigen::RowVector2d(t.y(), -t.x()).normalized().eval()
                               : Eigen::RowVector2d::Zero().eval();
    }
  }
  const double total = measure.sum();
  if (total <= 0.0) throw ConfigError("sample_mesh_surface: zero-area mesh");
  Vec cumulative(m);
  double acc = 0.0;
  for (Index f = 0; f < m; ++f) cumulative[f] = (acc += measure[f]);

  PointCloud cloud;
  cloud.points.resize(count, d);
  cloud.normals.resize(count, d);
  for (Index i = 0; i < count; ++i) {
    const double u = rng.uniform() * total;
    const Index f = std::upper_bound(cumulative.data(), cumulative.data() + m, u) -
                    cumulative.data();
    const Index face = std::min(f, m - 1);
    if (d == 3) {
      const double r1 = std::sqrt(rng.uniform());
      const double r2 = rng.uniform();
      const auto a = mesh.vertices.row(mesh.faces(face, 0));
      const auto b = mesh.vertices.row(mesh.faces(face, 1));
      const auto c = mesh.vertices.row(mesh.faces(face, 2));
      cloud.points.row(i) = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
    } else {
      const double t = rng.uniform();
      const auto a = mesh.vertices.row(mesh.faces(face, 0));
      const auto b = mesh.vertices.row(mesh.faces(face, 1));
      cloud.points.row(i) = (1.0 - t) * a + t * b;
    }
    cloud.normals.row(i) = face_normal.row(face);
  }
  cloud.validate();
  return cloud;
}

PointCloud add_noise(const PointCloud& cloud, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ConfigError("add_noise: sigma must be non-negative");
  PointCloud out = cloud;
  if (sigma == 0.0) return out;
  for (Index i = 0; i < out.points.rows(); ++i)
    for (int k = 0; k < out.dim(); ++k) out.points(i, k) += sigma * rng.normal();
  return out;
}

PointCloud subsample(const PointCloud& cloud, Index count, Rng& rng) {
  cloud.validate();
  if (count < 1) throw ConfigError("subsample: count must be positive");
  if (count == cloud.size()) return cloud;  // full draw, order preserved
  std::vector<Index> idx;
  idx.reserve(std::size_t(count));
  if (count > cloud.size()) {
    for (Index i = 0; i < count; ++i)
      idx.push_back(Index(rng.below(std::uint64_t(cloud.size()))));
  } else {
    std::vector<Index> pool(static_cast<std::size_t>(cloud.size()), Index(0));
    for (Index i = 0; i < cloud.size(); ++i) pool[std::size_t(i)] = i;
    for (Index i = 0; i < count; ++i) {
      const Index j = i + Index(rng.below(std::uint64_t(cloud.size() - i)));
      std::swap(pool[std::size_t(i)], pool[std::size_t(j)]);
      idx.push_back(pool[std::size_t(i)]);
    }
  }
  PointCloud out;
  out.norm = cloud.norm;
  out.points.resize(count, cloud.dim());
  if (cloud.has_normals()) out.normals.resize(count, cloud.dim());
  if (cloud.has_labels()) out.edge_labels.resize(std::size_t(count));
  for (Index i = 0; i < count; ++i) {
    out.points.row(i) = cloud.points.row(idx[std::size_t(i)]);
    if (cloud.has_normals()) out.normals.row(i) = cloud.normals.row(idx[std::size_t(i)]);
    if (cloud.has_labels())
      out.edge_labels[std::size_t(i)] = cloud.edge_labels[std::size_t(idx[std::size_t(i)])];
  }
  return out;
}

EdgeGroundTruth load_edge_ground_truth(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::string line;
  Index lineno = 0;
  bool labeled = false;
  bool decided = false;
  std::vector<std::pair<Index, bool>> pairs;
  std::vector<std::vector<double>> samples;
  int width = -1;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!decided && !std::isdigit(line[first]) && line[first] != '-' &&
        line[first] != '+' && line[first] != '.') {
      // header row decides the mode
      std::string work = line;
      std::replace(work.begin(), work.end(), ',', ' ');
      std::istringstream ss(work);
      std::string a;
      ss >> a;
      labeled = a == "index";
      decided = true;
      continue;
    }
    bool ok = false;
    std::vector<double> fields = parse_fields(line, true, &ok);
    if (!ok || fields.empty())
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed line");
    if (!decided) {
      // headerless files hold edge samples (x,y[,z] rows)
      labeled = false;
      decided = true;
    }
    if (labeled) {
      if (fields.size() != 2)
        throw IoError(path + ":" + std::to_string(lineno) + ": expected index,is_edge");
      const double idx = fields[0], flag = fields[1];
      if (idx < 0 || idx != std::floor(idx) || (flag != 0.0 && flag != 1.0))
        throw IoError(path + ":" + std::to_string(lineno) + ": bad label row");
      pairs.emplace_back(Index(idx), flag != 0.0);
    } else {
      if (width < 0) {
        width = int(fields.size());
        if (width != 2 && width != 3)
          throw IoError(path + ":" + std::to_string(lineno) +
                        ": expected 2 or 3 coordinates per edge sample");
      } else if (int(fields.size()) != width) {
        throw IoError(path + ":" + std::to_string(lineno) + ": inconsistent field count");
      }
      samples.push_back(std::move(fields));
    }
  }
  EdgeGroundTruth gt;
  if (labeled) {
    if (pairs.empty()) throw IoError(path + ": no label rows");
    gt.labels.assign(pairs.size(), 0);
    std::vector<bool> seen(pairs.size(), false);
    for (const auto& [idx, flag] : pairs) {
      if (idx >= Index(pairs.size()) || seen[std::size_t(idx)])
        throw IoError(path + ": label indices must cover 0..n-1 exactly once");
      seen[std::size_t(idx)] = true;
      gt.labels[std::size_t(idx)] = flag ? 1 : 0;
    }
  } else {
    if (samples.empty()) throw IoError(path + ": no edge samples");
    gt.edge_points.resize(Index(samples.size()), width);
    for (Index i = 0; i < gt.edge_points.rows(); ++i)
      for (int k = 0; k < width; ++k)
        gt.edge_points(i, k) = samples[std::size_t(i)][std::size_t(k)];
    if (!gt.edge_points.allFinite())
      throw NumericError(path + ": non-finite edge sample");
  }
  return gt;
}

void attach_edge_labels(PointCloud& cloud, const EdgeGroundTruth& gt) {
  if (!gt.labeled()) throw ConfigError("attach_edge_labels: ground truth is not labeled");
  if (Index(gt.labels.size()) != cloud.size())
    throw ConfigError("attach_edge_labels: label count " +
                      std::to_string(gt.labels.size()) + " does not match cloud size " +
                      std::to_string(cloud.size()));
  cloud.edge_labels = gt.labels;
}

}  // namespace epsdf
