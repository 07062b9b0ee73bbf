#include "peelkit/camera.hpp"

#include <cmath>

#include "peelkit/errors.hpp"

namespace peelkit {

Camera Camera::look_at(const Vec3& center, const Vec3& target, const Vec3& up_hint,
                       Projection proj, double param, uint32_t w, uint32_t h) {
  Camera c;
  c.center = center;
  c.forward = normalized(target - center);
  c.right = normalized(cross(c.forward, up_hint));
  c.up = cross(c.right, c.forward);
  c.projection = proj;
  c.param = param;
  c.width = w;
  c.height = h;
  return c;
}

Camera Camera::standard(Projection proj, double param, uint32_t w, uint32_t h) {
  Camera c;
  c.projection = proj;
  c.param = param;
  c.width = w;
  c.height = h;
  return c;
}

bool Camera::basis_orthonormal(double tol) const {
  return std::abs(norm(right) - 1.0) <= tol && std::abs(norm(up) - 1.0) <= tol &&
         std::abs(norm(forward) - 1.0) <= tol && std::abs(dot(right, up)) <= tol &&
         std::abs(dot(right, forward)) <= tol && std::abs(dot(up, forward)) <= tol;
}

void Camera::validate() const {
  if (width < 1 || height < 1) throw Error("camera resolution must be at least 1x1");
  if (!basis_orthonormal()) throw Error("camera basis is not orthonormal");
  if (param <= 0.0) throw Error("camera projection parameter must be positive");
}

Ray Camera::pixel_ray(uint32_t x, uint32_t y) const {
  // NDC in [-1, 1], +v up, pixel centers.
  double u = ((x + 0.5) / width) * 2.0 - 1.0;
  double v = 1.0 - ((y + 0.5) / height) * 2.0;
  double aspect = static_cast<double>(width) / height;
  Ray r;
  if (projection == Projection::Perspective) {
    double half_v = std::tan(param * 0.5);
    r.origin = center;
    r.direction = normalized(forward + right * (u * half_v * aspect) + up * (v * half_v));
  } else {
    r.origin = center + right * (u * param * aspect) + up * (v * param);
    r.direction = forward;
  }
  return r;
}

void Camera::project(const Vec3& p, double& px, double& py) const {
  Vec3 d = p - center;
  double cx = dot(d, right), cy = dot(d, up), cz = dot(d, forward);
  double aspect = static_cast<double>(width) / height;
  double u, v;
  if (projection == Projection::Perspective) {
    double half_v = std::tan(param * 0.5);
    u = (cx / cz) / (half_v * aspect);
    v = (cy / cz) / half_v;
  } else {
    u = cx / (param * aspect);
    v = cy / param;
  }
  px = (u + 1.0) * 0.5 * width - 0.5;
  py = (1.0 - v) * 0.5 * height - 0.5;
}

double Camera::pixel_footprint(double dist) const {
  if (projection == Projection::Perspective)
    return 2.0 * std::tan(param * 0.5) * dist / height;
  return 2.0 * param / height;
}

bool Camera::operator==(const Camera& o) const {
  return center == o.center && right == o.right && up == o.up && forward == o.forward &&
         projection == o.projection && param == o.param && width == o.width &&
         height == o.height;
}

}  // namespace peelkit
