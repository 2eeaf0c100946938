#pragma once

#include <string>

#include "epsdf/types.hpp"

namespace epsdf {

/// Piecewise-linear surface: triangles in 3D, line segments in 2D.
/// `faces` has 3 columns (triangles) or 2 (segments); indices are 0-based.
struct TriMesh {
  Mat vertices;           // (n x d)
  Eigen::MatrixXi faces;  // (m x 3) or (m x 2)
  Mat normals;            // optional per-vertex normals, (n x d) or empty

  int dim() const { return int(vertices.cols()); }
  Index num_vertices() const { return vertices.rows(); }
  Index num_faces() const { return faces.rows(); }
  bool empty() const { return vertices.rows() == 0; }
  bool has_normals() const { return normals.rows() == vertices.rows() && normals.rows() > 0; }

  /// Throws on out-of-range indices or non-finite vertices.
  void validate() const;
};

/// ASCII OBJ: `v` (and `vn`) records plus `f` triangles, or `l` segments for
/// 2D meshes (written with z = 0).
void save_mesh_obj(const std::string& path, const TriMesh& mesh);

/// binary_little_endian PLY with double vertex properties and a face (or
/// edge, in 2D) element.
void save_mesh_ply(const std::string& path, const TriMesh& mesh);

/// Reads the OBJ/PLY subsets written above; format chosen by extension.
TriMesh load_mesh(const std::string& path);

}  // namespace epsdf
