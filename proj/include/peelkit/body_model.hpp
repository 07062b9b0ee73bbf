#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peelkit/math.hpp"
#include "peelkit/mesh.hpp"

namespace peelkit {

// Linear-blend-skinned parametric body: template + shape/pose blendshapes,
// joints regressed from shaped vertices, skinning weights over an acyclic
// joint tree.
struct BodyModel {
  std::vector<Vec3> template_verts;               // V
  std::vector<double> weights;                    // V x J, row-major
  std::vector<Vec3> shape_basis;                  // S slices of V displacements
  std::vector<Vec3> pose_basis;                   // P slices of V, P = 9*(J-1)
  std::vector<double> joint_regressor;            // J x V, row-major
  std::vector<int32_t> parents;                   // J entries, root = -1
  std::vector<std::array<uint32_t, 3>> triangles;

  int vertex_count() const { return static_cast<int>(template_verts.size()); }
  int joint_count() const { return static_cast<int>(parents.size()); }
  int shape_count() const {
    return template_verts.empty() ? 0
                                  : static_cast<int>(shape_basis.size() / template_verts.size());
  }
  int pose_feature_count() const {
    return template_verts.empty() ? 0
                                  : static_cast<int>(pose_basis.size() / template_verts.size());
  }

  // Weight rows non-negative summing to 1 (1e-5); regressor rows sum to 1
  // (1e-4); parent array acyclic with exactly one root; tensor sizes
  // consistent, pose features = 9*(J-1). Throws Error.
  void validate() const;
};

struct BodyParams {
  std::vector<double> beta;  // length S, or empty for zeros
  std::vector<Vec3> theta;   // per-joint axis-angle, length J, or empty
  double s = 1.0, tx = 0.0, ty = 0.0;
};

// Template + shape blendshape(beta), joints regressed from the shaped
// vertices, pose blendshape from flattened (R_j - I) of non-root joints in
// index order, then linear blend skinning along the kinematic chain.
// Axis-angle magnitudes wrap into [0, 2pi). Throws DimensionMismatch when
// beta/theta lengths disagree with the model.
TriangleMesh evaluate(const BodyModel& model, const BodyParams& params);

// x' = s(x + tx), y' = s(y + ty), z' = s z, staying in world coordinates for
// the fixed render camera. Throws NonPositiveScale.
TriangleMesh apply_weak_perspective(const TriangleMesh& mesh, double s, double tx, double ty);

// Deterministic capsule-limb chain with valid invariants, for tests and
// sample pipelines. vertex count is approximate.
BodyModel generate_toy_model(int joints, int approx_vertices, uint64_t seed);

// LBSM container: "LBSM" magic, u32 version, u32 dims (V, J, S, P, T), then
// little-endian float32 tensors in field order, i32 parents, u32 triangles.
void save_lbsm(const BodyModel& model, const std::string& path);
BodyModel load_lbsm(const std::string& path);

}  // namespace peelkit
