#include "peelkit/mesh.hpp"

#include <algorithm>
#include <random>

#include "peelkit/errors.hpp"

namespace peelkit {

Aabb TriangleMesh::bounds() const {
  Aabb b;
  for (const Vec3& v : vertices) b.expand(v);
  return b;
}

double TriangleMesh::triangle_area(size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  const Vec3& b = vertices[tri[1]];
  const Vec3& c = vertices[tri[2]];
  return 0.5 * norm(cross(b - a, c - a));
}

Vec3 TriangleMesh::triangle_normal(size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  const Vec3& b = vertices[tri[1]];
  const Vec3& c = vertices[tri[2]];
  return normalized(cross(b - a, c - a));
}

size_t TriangleMesh::drop_degenerate_triangles(double area_eps) {
  const size_t nv = vertices.size();
  size_t before = triangles.size();
  std::erase_if(triangles, [&](const std::array<uint32_t, 3>& tri) {
    if (tri[0] >= nv || tri[1] >= nv || tri[2] >= nv) return true;
    const Vec3& a = vertices[tri[0]];
    const Vec3& b = vertices[tri[1]];
    const Vec3& c = vertices[tri[2]];
    return 0.5 * norm(cross(b - a, c - a)) <= area_eps;
  });
  return before - triangles.size();
}

void TriangleMesh::compute_vertex_normals() { normals = area_weighted_normals(*this); }

std::vector<Vec3> area_weighted_normals(const TriangleMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3{});
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    Vec3 n = cross(b - a, c - a);  // length = 2*area, so this is area weighting
    normals[tri[0]] += n;
    normals[tri[1]] += n;
    normals[tri[2]] += n;
  }
  for (Vec3& n : normals) n = normalized(n);
  return normals;
}

void TriangleMesh::transform(const Mat3& rot, const Vec3& trans) {
  for (Vec3& v : vertices) v = rot * v + trans;
  for (Vec3& n : normals) n = normalized(rot * n);
}

void TriangleMesh::append(const TriangleMesh& other) {
  const uint32_t base = static_cast<uint32_t>(vertices.size());
  // Keep optional attributes consistent across the union.
  if (has_colors() && !other.has_colors())
    colors.resize(vertices.size() + other.vertices.size(), Vec3{1, 1, 1});
  if (!has_colors() && other.has_colors() && !vertices.empty())
    colors.assign(vertices.size(), Vec3{1, 1, 1});
  if (has_normals() != other.has_normals()) normals.clear();

  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  if (other.has_colors())
    colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  else if (has_colors())
    colors.resize(vertices.size(), Vec3{1, 1, 1});
  if (!normals.empty() && other.has_normals())
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  for (const auto& tri : other.triangles)
    triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, size_t n, uint64_t seed,
                                 std::vector<Vec3>* out_normals) {
  if (mesh.triangles.empty()) throw EmptyMesh("cannot sample an empty mesh");
  std::vector<double> cum(mesh.triangles.size());
  double total = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cum[t] = total;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> points;
  points.reserve(n);
  if (out_normals) {
    out_normals->clear();
    out_normals->reserve(n);
  }
  for (size_t i = 0; i < n; ++i) {
    double r = uni(rng) * total;
    size_t t = std::lower_bound(cum.begin(), cum.end(), r) - cum.begin();
    if (t >= mesh.triangles.size()) t = mesh.triangles.size() - 1;
    // sqrt trick for uniform barycentrics
    double su = std::sqrt(uni(rng));
    double v = uni(rng);
    double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
    const auto& tri = mesh.triangles[t];
    points.push_back(mesh.vertices[tri[0]] * b0 + mesh.vertices[tri[1]] * b1 +
                     mesh.vertices[tri[2]] * b2);
    if (out_normals) {
      Vec3 nrm;
      if (mesh.has_normals())
        nrm = normalized(mesh.normals[tri[0]] * b0 + mesh.normals[tri[1]] * b1 +
                         mesh.normals[tri[2]] * b2);
      else
        nrm = mesh.triangle_normal(t);
      out_normals->push_back(nrm);
    }
  }
  return points;
}

}  // namespace peelkit
