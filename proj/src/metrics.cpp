#include "peelkit/metrics.hpp"

#include <cmath>

#include "peelkit/errors.hpp"
#include "peelkit/kdtree.hpp"
#include "peelkit/parallel.hpp"

namespace peelkit {

namespace {

// Directed sum of squared nearest-neighbor distances, accumulated in a fixed
// order regardless of thread count.
double directed_sum_sq(const std::vector<Vec3>& from, const KdTree& to_tree) {
  std::vector<double> d2(from.size());
  parallel_for(0, static_cast<int64_t>(from.size()),
               [&](int64_t i) { d2[i] = to_tree.nearest(from[i]).dist2; });
  double sum = 0.0;
  for (double v : d2) sum += v;
  return sum;
}

}  // namespace

double chamfer_sum_sq(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw EmptySet("chamfer distance needs two non-empty sets");
  const KdTree ta = KdTree::build(a), tb = KdTree::build(b);
  return directed_sum_sq(a, tb) + directed_sum_sq(b, ta);
}

double chamfer_mean(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw EmptySet("chamfer distance needs two non-empty sets");
  const KdTree ta = KdTree::build(a), tb = KdTree::build(b);
  return directed_sum_sq(a, tb) / static_cast<double>(a.size()) +
         directed_sum_sq(b, ta) / static_cast<double>(b.size());
}

double point_to_surface(const std::vector<Vec3>& points, const TriangleMesh& mesh,
                        const Bvh& bvh) {
  if (points.empty()) throw EmptySet("surface distance needs a non-empty point set");
  if (mesh.triangles.empty()) throw EmptyMesh("surface distance needs a non-empty mesh");
  std::vector<double> d(points.size());
  parallel_for(0, static_cast<int64_t>(points.size()), [&](int64_t i) {
    d[i] = std::sqrt(bvh.closest_point(mesh, points[i]).dist2);
  });
  double sum = 0.0;
  for (double v : d) sum += v;
  return sum / static_cast<double>(points.size());
}

double normal_map_l2(const std::vector<float>& pred, const std::vector<float>& gt) {
  if (pred.size() != gt.size()) throw ResolutionMismatch("normal maps differ in size");
  if (pred.size() % 3 != 0) throw DimensionMismatch("normal maps must be xyz-interleaved");
  const size_t n = pred.size() / 3;
  double sum = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < n; ++i) {
    const double px = pred[3 * i], py = pred[3 * i + 1], pz = pred[3 * i + 2];
    const double gx = gt[3 * i], gy = gt[3 * i + 1], gz = gt[3 * i + 2];
    const bool has_p = px != 0.0 || py != 0.0 || pz != 0.0;
    const bool has_g = gx != 0.0 || gy != 0.0 || gz != 0.0;
    if (!has_p && !has_g) continue;
    const double dx = px - gx, dy = py - gy, dz = pz - gz;
    sum += std::sqrt(dx * dx + dy * dy + dz * dz);
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace peelkit
