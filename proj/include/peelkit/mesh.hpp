#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "peelkit/math.hpp"

namespace peelkit {

// Indexed triangle mesh with optional per-vertex colors (RGB in [0,1]) and
// unit normals. Immutable by convention once finalized; the renderer and
// metric queries read it from many threads.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<uint32_t, 3>> triangles;
  std::vector<Vec3> colors;   // empty or one per vertex
  std::vector<Vec3> normals;  // empty or one per vertex, unit length

  bool has_colors() const { return !colors.empty(); }
  bool has_normals() const { return !normals.empty(); }
  size_t vertex_count() const { return vertices.size(); }
  size_t triangle_count() const { return triangles.size(); }

  Aabb bounds() const;

  double triangle_area(size_t t) const;
  Vec3 triangle_normal(size_t t) const;  // unit, zero for degenerate

  // Drops triangles with area <= area_eps (and any with out-of-range
  // indices); returns how many were removed. Scan meshes routinely
  // contain slivers, so this is a warning counter, not an error.
  size_t drop_degenerate_triangles(double area_eps = 1e-12);

  // Area-weighted vertex normals; overwrites `normals`.
  void compute_vertex_normals();

  // Applies an affine map p -> rot * p + trans to vertices (and rotates
  // normals if present).
  void transform(const Mat3& rot, const Vec3& trans);

  void append(const TriangleMesh& other);
};

// Area-weighted vertex normals of a mesh, without mutating it.
std::vector<Vec3> area_weighted_normals(const TriangleMesh& mesh);

// Deterministic area-weighted uniform surface sampling. Returns n points;
// normals (interpolated from the mesh, or face normals if the mesh has
// none) go to *out_normals when non-null.
std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t n, uint64_t seed,
                                 std::vector<Vec3>* out_normals = nullptr);

}  // namespace peelkit
