#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "peelkit/camera.hpp"
#include "peelkit/mesh.hpp"

namespace peelkit {

struct Hit {
  double t = 0.0;
  uint32_t triangle = 0;
  // Barycentric weights of the triangle's three vertices; in [0,1], sum 1.
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;

  Vec3 point(const Ray& ray) const { return ray.at(t); }
};

// Watertight ray-triangle test (shear + 2D edge functions, double precision).
// Both windings hit; intersections exactly on an edge are reported by every
// triangle sharing it, so callers dedupe via merge_hits.
std::optional<Hit> ray_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                uint32_t triangle_id);

// Sorts by (t, triangle id) and collapses runs closer than merge_eps to the
// first hit of the run. A tie in t keeps the lower triangle id, which is what
// makes shared-edge hits deterministic.
void finalize_hits(std::vector<Hit>& hits, double merge_eps);

struct BvhNode {
  Aabb box;
  uint32_t a = 0;      // internal: left child index; leaf: first slot in tri_order
  uint32_t b = 0;      // internal: right child index; leaf: unused
  uint32_t count = 0;  // 0 for internal nodes, triangle count for leaves
  bool is_leaf() const { return count > 0; }
};

// Binned-SAH BVH over the mesh's non-degenerate triangles (16 bins, at most
// 8 triangles per leaf). Immutable after construction; concurrent read-only
// queries are safe.
class Bvh {
 public:
  static constexpr uint32_t kMaxLeafSize = 8;
  static constexpr int kBins = 16;

  // Throws EmptyMesh if no triangle survives the degeneracy filter.
  static Bvh build(const TriangleMesh& mesh, double area_eps = 1e-12);

  // Every intersection with t > ray.t_min, ascending in t, duplicates merged
  // with merge_epsilon().
  std::vector<Hit> intersect_all(const TriangleMesh& mesh, const Ray& ray) const;

  struct SurfacePoint {
    Vec3 point;
    double dist2 = 0.0;
    uint32_t triangle = 0;
  };
  // Exact nearest point on the mesh surface (interior / edge / vertex cases).
  SurfacePoint closest_point(const TriangleMesh& mesh, const Vec3& query) const;

  const std::vector<BvhNode>& nodes() const { return nodes_; }
  const std::vector<uint32_t>& tri_order() const { return tri_order_; }
  const Aabb& bounds() const { return nodes_.empty() ? empty_box_ : nodes_[0].box; }
  double scene_diagonal() const { return bounds().diagonal(); }
  double merge_epsilon() const { return 1e-6 * scene_diagonal(); }

 private:
  std::vector<BvhNode> nodes_;
  std::vector<uint32_t> tri_order_;
  static const Aabb empty_box_;
};

// Exact squared distance from a point to a triangle, plus the closest point.
double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                            Vec3* closest = nullptr);

}  // namespace peelkit
