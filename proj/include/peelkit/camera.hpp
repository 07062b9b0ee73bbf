#pragma once

#include <cstdint>

#include "peelkit/math.hpp"

namespace peelkit {

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double t_min = 0.0;

  Vec3 at(double t) const { return origin + direction * t; }
};

enum class Projection : uint8_t { Perspective = 0, Orthographic = 1 };

// Pinhole / orthographic camera with an explicit orthonormal basis.
// Rays go through pixel centers; image row 0 is the top of the frame.
struct Camera {
  Vec3 center{0, 0, 10};
  Vec3 right{1, 0, 0};
  Vec3 up{0, 1, 0};
  Vec3 forward{0, 0, -1};
  Projection projection = Projection::Perspective;
  // Perspective: full vertical field of view in radians.
  // Orthographic: half-extent of the vertical span in world units.
  double param = 0.2617993877991494;  // 15 degrees
  uint32_t width = 512;
  uint32_t height = 512;

  static Camera look_at(const Vec3& center, const Vec3& target, const Vec3& up_hint,
                        Projection proj, double param, uint32_t w, uint32_t h);

  // Default rig: center (0, 0, 10), +Y up, looking down -Z at the origin.
  static Camera standard(Projection proj, double param, uint32_t w, uint32_t h);

  bool basis_orthonormal(double tol = 1e-9) const;
  void validate() const;  // throws Error on bad basis / zero resolution

  // Ray through the center of pixel (x, y); x in [0,w), y in [0,h), y down.
  Ray pixel_ray(uint32_t x, uint32_t y) const;

  // Inverse of pixel_ray for points: image-plane coordinates (px, py) in
  // continuous pixel units of the point's projection.
  void project(const Vec3& p, double& px, double& py) const;

  // World-space size of one pixel at distance `dist` along the view axis
  // (independent of dist for orthographic).
  double pixel_footprint(double dist) const;

  bool operator==(const Camera& o) const;
};

}  // namespace peelkit
