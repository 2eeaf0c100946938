#include "epsdf/mesh.hpp"

#include <algorithm>
#include <cstdint>
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

int obj_index(const std::string& token, Index n_vertices, const std::string& path) {
  // accepts "i", "i/t", "i//n", "i/t/n"; 1-based
  const long i = std::strtol(token.c_str(), nullptr, 10);
  if (i < 1 || Index(i) > n_vertices)
    throw IoError(path + ": face index out of range");
  return int(i - 1);
}

}  // namespace

void TriMesh::validate() const {
  if (!vertices.allFinite()) throw NumericError("TriMesh: non-finite vertex");
  const int cols = dim() == 2 ? 2 : 3;
  if (num_faces() > 0 && faces.cols() != cols)
    throw ConfigError("TriMesh: face arity does not match dimension");
  if (num_faces() > 0) {
    const int lo = faces.minCoeff();
    const int hi = faces.maxCoeff();
    if (lo < 0 || Index(hi) >= num_vertices())
      throw ConfigError("TriMesh: face index out of range");
  }
}

void save_mesh_obj(const std::string& path, const TriMesh& mesh) {
  mesh.validate();
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.precision(17);
  const int d = mesh.dim();
  for (Index i = 0; i < mesh.num_vertices(); ++i) {
    os << "v " << mesh.vertices(i, 0) << ' ' << mesh.vertices(i, 1) << ' '
       << (d == 3 ? mesh.vertices(i, 2) : 0.0) << '\n';
  }
  if (mesh.has_normals()) {
    for (Index i = 0; i < mesh.normals.rows(); ++i) {
      os << "vn " << mesh.normals(i, 0) << ' ' << mesh.normals(i, 1) << ' '
         << (d == 3 ? mesh.normals(i, 2) : 0.0) << '\n';
    }
  }
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    if (d == 3) {
      os << "f";
      for (int k = 0; k < 3; ++k) {
        os << ' ' << mesh.faces(f, k) + 1;
        if (mesh.has_normals()) os << "//" << mesh.faces(f, k) + 1;
      }
      os << '\n';
    } else {
      os << "l " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << '\n';
    }
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

void save_mesh_ply(const std::string& path, const TriMesh& mesh) {
  mesh.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  const int d = mesh.dim();
  os << "ply\nformat binary_little_endian 1.0\n";
  os << "element vertex " << mesh.num_vertices() << '\n';
  os << "property double x\nproperty double y\nproperty double z\n";
  if (mesh.has_normals())
    os << "property double nx\nproperty double ny\nproperty double nz\n";
  if (d == 3) {
    os << "element face " << mesh.num_faces() << '\n';
    os << "property list uchar int vertex_indices\n";
  } else {
    os << "element edge " << mesh.num_faces() << '\n';
    os << "property int vertex1\nproperty int vertex2\n";
  }
  os << "end_header\n";
  auto put = [&os](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  for (Index i = 0; i < mesh.num_vertices(); ++i) {
    put(mesh.vertices(i, 0));
    put(mesh.vertices(i, 1));
    put(d == 3 ? mesh.vertices(i, 2) : 0.0);
    if (mesh.has_normals()) {
      put(mesh.normals(i, 0));
      put(mesh.normals(i, 1));
      put(d == 3 ? mesh.normals(i, 2) : 0.0);
    }
  }
  for (Index f = 0; f < mesh.num_faces(); ++f) {
    if (d == 3) {
      const std::uint8_t n = 3;
      os.write(reinterpret_cast<const char*>(&n), 1);
      for (int k = 0; k < 3; ++k) {
        const std::int32_t idx = mesh.faces(f, k);
        os.write(reinterpret_cast<const char*>(&idx), 4);
      }
    } else {
      for (int k = 0; k < 2; ++k) {
        const std::int32_t idx = mesh.faces(f, k);
        os.write(reinterpret_cast<const char*>(&idx), 4);
      }
    }
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

namespace {

TriMesh load_mesh_obj(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3d> normals;
  std::vector<Eigen::Vector3i> tris;
  std::vector<Eigen::Vector2i> segs;
  std::string line;
  Index lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Eigen::Vector3d v;
      if (!(ss >> v[0] >> v[1] >> v[2]))
        throw IoError(path + ":" + std::to_string(lineno) + ": malformed vertex");
      vertices.push_back(v);
    } else if (tag == "vn") {
      Eigen::Vector3d v;
      if (!(ss >> v[0] >> v[1] >> v[2]))
        throw IoError(path + ":" + std::to_string(lineno) + ": malformed normal");
      normals.push_back(v);
    } else if (tag == "f") {
      std::vector<std::string> tokens;
      std::string t;
      while (ss >> t) tokens.push_back(t);
      if (tokens.size() != 3)
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": only triangular faces are supported");
      Eigen::Vector3i f;
      for (int k = 0; k < 3; ++k)
        f[k] = obj_index(tokens[std::size_t(k)], Index(vertices.size()), path);
      tris.push_back(f);
    } else if (tag == "l") {
      std::string a, b;
      if (!(ss >> a >> b))
        throw IoError(path + ":" + std::to_string(lineno) + ": malformed segment");
      segs.push_back({obj_index(a, Index(vertices.size()), path),
                      obj_index(b, Index(vertices.size()), path)});
    }
    // other records (vt, usemtl, ...) are ignored
  }
  TriMesh mesh;
  mesh.vertices.resize(Index(vertices.size()), 3);
  for (Index i = 0; i < mesh.vertices.rows(); ++i)
    mesh.vertices.row(i) = vertices[std::size_t(i)].transpose();
  if (normals.size() == vertices.size() && !normals.empty()) {
    mesh.normals.resize(Index(normals.size()), 3);
    for (Index i = 0; i < mesh.normals.rows(); ++i)
      mesh.normals.row(i) = normals[std::size_t(i)].transpose();
  }
  if (!tris.empty()) {
    mesh.faces.resize(Index(tris.size()), 3);
    for (Index i = 0; i < mesh.faces.rows(); ++i)
      mesh.faces.row(i) = tris[std::size_t(i)].transpose();
  } else if (!segs.empty()) {
    mesh.faces.resize(Index(segs.size()), 2);
    for (Index i = 0; i < mesh.faces.rows(); ++i)
      mesh.faces.row(i) = segs[std::size_t(i)].transpose();
    // segment meshes round-trip as 3D with z = 0; collapse back to 2D
    mesh.vertices.conservativeResize(Eigen::NoChange, 2);
    if (mesh.normals.rows() > 0) mesh.normals.conservativeResize(Eigen::NoChange, 2);
  }
  mesh.validate();
  return mesh;
}

TriMesh load_mesh_ply(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  const ply::Header header = ply::parse_header(is, path);
  TriMesh mesh;
  std::vector<Eigen::Vector3i> tris;
  std::vector<Eigen::Vector2i> segs;
  for (const auto& el : header.elements) {
    if (el.name == "vertex") {
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
      if (ix < 0 || iy < 0 || iz < 0)
        throw IoError(path + ": vertex element missing x/y/z");
      const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;
      mesh.vertices.resize(el.count, 3);
      if (with_normals) mesh.normals.resize(el.count, 3);
      std::vector<double> row(el.props.size());
      for (Index i = 0; i < el.count; ++i) {
        for (std::size_t p = 0; p < el.props.size(); ++p)
          row[p] = ply::read_scalar(is, el.props[p].type, header.binary, path);
        mesh.vertices.row(i) << row[std::size_t(ix)], row[std::size_t(iy)],
            row[std::size_t(iz)];
        if (with_normals)
          mesh.normals.row(i) << row[std::size_t(inx)], row[std::size_t(iny)],
              row[std::size_t(inz)];
      }
    } else if (el.name == "face") {
      for (Index i = 0; i < el.count; ++i) {
        const auto& prop = el.props.at(0);
        if (!prop.is_list) throw IoError(path + ": face element without list property");
        const int n = int(ply::read_scalar(is, prop.count_type, header.binary, path));
        if (n != 3) throw IoError(path + ": only triangular faces are supported");
        Eigen::Vector3i f;
        for (int k = 0; k < 3; ++k)
          f[k] = int(ply::read_scalar(is, prop.type, header.binary, path));
        tris.push_back(f);
      }
    } else if (el.name == "edge") {
      for (Index i = 0; i < el.count; ++i) {
        Eigen::Vector2i e;
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const double v = ply::read_scalar(is, el.props[p].type, header.binary, path);
          if (p < 2) e[int(p)] = int(v);
        }
        segs.push_back(e);
      }
    } else {
      // skip unknown elements
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
    }
  }
  if (!tris.empty()) {
    mesh.faces.resize(Index(tris.size()), 3);
    for (Index i = 0; i < mesh.faces.rows(); ++i)
      mesh.faces.row(i) = tris[std::size_t(i)].transpose();
  } else if (!segs.empty()) {
    mesh.faces.resize(Index(segs.size()), 2);
    for (Index i = 0; i < mesh.faces.rows(); ++i)
      mesh.faces.row(i) = segs[std::size_t(i)].transpose();
  }
  if (mesh.num_faces() > 0 && mesh.faces.cols() == 2) {
    // segment mesh round-trips as 3D with z = 0; collapse back to 2D
    mesh.vertices.conservativeResize(Eigen::NoChange, 2);
    if (mesh.normals.rows() > 0) mesh.normals.conservativeResize(Eigen::NoChange, 2);
  }
  mesh.validate();
  return mesh;
}

}  // namespace

TriMesh load_mesh(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "obj") return load_mesh_obj(path);
  if (ext == "ply") return load_mesh_ply(path);
  throw IoError("unsupported mesh extension '" + ext + "' for '" + path + "'");
}

}  // namespace epsdf
