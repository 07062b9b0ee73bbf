#pragma once

#include <vector>

#include "peelkit/bvh.hpp"
#include "peelkit/mesh.hpp"

namespace peelkit {

struct MetricReport {
  double chamfer = 0.0;       // symmetric sum of squared distances
  double chamfer_mean = 0.0;  // per-set-normalized variant of the same sum
  double p2s = 0.0;           // mean point-to-surface distance
  double normal_l2 = 0.0;     // mean normal-map difference, when computed
};

// Symmetric squared-nearest-neighbor sums between point sets: for each point
// the squared distance to its nearest point in the other set. chamfer_sum_sq
// adds the two directed sums; chamfer_mean normalizes each direction by its
// set size first. Throws EmptySet.
double chamfer_sum_sq(const std::vector<Vec3>& a, const std::vector<Vec3>& b);
double chamfer_mean(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Mean unsquared distance from each point to the closest triangle of the
// mesh. Throws EmptySet / EmptyMesh.
double point_to_surface(const std::vector<Vec3>& points, const TriangleMesh& mesh,
                        const Bvh& bvh);

// Mean Euclidean difference between two rendered normal maps (interleaved
// xyz per pixel) over the pixels where either map has support. Zero-vector
// pixels on one side contribute the other side's norm.
double normal_map_l2(const std::vector<float>& pred, const std::vector<float>& gt);

}  // namespace peelkit
