#pragma once

// Synthetic shape fixtures shared by unit and acceptance tests.

#include "epsdf/dataio.hpp"
#include "epsdf/jet.hpp"
#include "epsdf/mesh.hpp"
#include "epsdf/types.hpp"

namespace epsdf::testing {

inline Vec random_direction(int dim, Rng& rng) {
  Vec v(dim);
  double norm = 0.0;
  do {
    for (int k = 0; k < dim; ++k) v[k] = rng.normal();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

/// Uniform samples of a radius-r sphere (3D) or circle (2D), with outward
/// normals.
inline PointCloud sphere_cloud(Index n, double radius, int dim, Rng& rng) {
  PointCloud cloud;
  cloud.points.resize(n, dim);
  cloud.normals.resize(n, dim);
  for (Index i = 0; i < n; ++i) {
    const Vec u = random_direction(dim, rng);
    cloud.points.row(i) = (radius * u).transpose();
    cloud.normals.row(i) = u.transpose();
  }
  return cloud;
}

/// Axis-aligned cube surface, 12 triangles, side `side`, centered at origin.
inline TriMesh cube_mesh(double side) {
  const double h = 0.5 * side;
  TriMesh mesh;
  mesh.vertices.resize(8, 3);
  mesh.vertices << -h, -h, -h, h, -h, -h, h, h, -h, -h, h, -h,
                   -h, -h, h, h, -h, h, h, h, h, -h, h, h;
  mesh.faces.resize(12, 3);
  mesh.faces << 0, 2, 1, 0, 3, 2,   // bottom (z = -h)
                4, 5, 6, 4, 6, 7,   // top
                0, 1, 5, 0, 5, 4,   // front (y = -h)
                2, 3, 7, 2, 7, 6,   // back
                1, 2, 6, 1, 6, 5,   // right (x = +h)
                3, 0, 4, 3, 4, 7;   // left
  return mesh;
}

/// Uniform samples of the 12 sharp edges of the cube above.
inline Mat cube_edge_samples(double side, Index count, Rng& rng) {
  const double h = 0.5 * side;
  // each edge: start corner and axis it runs along
  const double corners[12][3] = {
      {-h, -h, -h}, {-h, h, -h}, {-h, -h, h}, {-h, h, h},   // along x
      {-h, -h, -h}, {h, -h, -h}, {-h, -h, h}, {h, -h, h},   // along y
      {-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h},   // along z
  };
  Mat out(count, 3);
  for (Index i = 0; i < count; ++i) {
    const int e = int(rng.below(12));
    const int axis = e / 4;
    const double t = rng.uniform();
    out(i, 0) = corners[e][0];
    out(i, 1) = corners[e][1];
    out(i, 2) = corners[e][2];
    out(i, axis) += t * side;
  }
  return out;
}

/// Exact jet of the plane field f(x) = n.x + c for a unit normal n.
inline Jet2 plane_jet(const Vec& normal, double offset, const Vec& x) {
  Jet2 jet = Jet2::constant(normal.dot(x) + offset, int(x.size()));
  jet.grad = normal;
  return jet;
}

/// Exact jet of the sphere field f(x) = |x| - r, valid away from the origin.
inline Jet2 sphere_jet(const Vec& x, double radius) {
  const int d = int(x.size());
  const double len = x.norm();
  Jet2 jet = Jet2::constant(len - radius, d);
  jet.grad = x / len;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      jet.hess[packed_index(i, j, d)] =
          ((i == j ? 1.0 : 0.0) - x[i] * x[j] / (len * len)) / len;
  return jet;
}

}  // namespace epsdf::testing
