#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peelkit/mesh.hpp"

namespace peelkit {

// Procedural geometry used by the test scenes and the toy body. All
// generators are deterministic from their arguments alone.

TriangleMesh make_uv_sphere(const Vec3& center, double radius, int stacks, int slices);
TriangleMesh make_box(const Vec3& center, const Vec3& half_extent);

// Capsule around the segment p0..p1: hemispherical caps joined by a wall.
// rings counts latitude subdivisions pole to pole, segments the longitudes.
TriangleMesh make_capsule(const Vec3& p0, const Vec3& p1, double radius, int rings,
                          int segments);

// Open lateral surface between two circles perpendicular to the Y axis (a
// truncated-cone shell; no caps).
TriangleMesh make_cone_shell(const Vec3& top_center, double top_radius,
                             const Vec3& bottom_center, double bottom_radius, int segments);

std::vector<std::string> synth_scene_names();

// Deterministic fixture scene by name: sphere, cube, nested-spheres,
// nested-spheres-3, toy-body, loose-skirt. Vertices get position-derived
// colors. Unknown names raise Error listing the valid ones.
TriangleMesh synth_scene(const std::string& name, uint64_t seed);

}  // namespace peelkit
