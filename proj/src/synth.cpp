#include "peelkit/synth.hpp"

#include <algorithm>
#include <cmath>

#include "peelkit/body_model.hpp"
#include "peelkit/errors.hpp"

namespace peelkit {

TriangleMesh make_uv_sphere(const Vec3& center, double radius, int stacks, int slices) {
  TriangleMesh m;
  const double pi = M_PI;
  m.vertices.push_back(center + Vec3{0, radius, 0});  // top pole
  for (int i = 1; i < stacks; ++i) {
    const double phi = pi * i / stacks;
    const double y = std::cos(phi), r = std::sin(phi);
    for (int j = 0; j < slices; ++j) {
      const double th = 2.0 * pi * j / slices;
      m.vertices.push_back(center + Vec3{radius * r * std::cos(th), radius * y,
                                         radius * r * std::sin(th)});
    }
  }
  m.vertices.push_back(center + Vec3{0, -radius, 0});  // bottom pole
  const uint32_t bottom = static_cast<uint32_t>(m.vertices.size() - 1);
  auto ring = [&](int i, int j) { return static_cast<uint32_t>(1 + (i - 1) * slices + j % slices); };
  for (int j = 0; j < slices; ++j) m.triangles.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i + 1 < stacks; ++i) {
    for (int j = 0; j < slices; ++j) {
      const uint32_t a = ring(i, j), b = ring(i, j + 1), c = ring(i + 1, j), d = ring(i + 1, j + 1);
      m.triangles.push_back({a, b, d});
      m.triangles.push_back({a, d, c});
    }
  }
  for (int j = 0; j < slices; ++j)
    m.triangles.push_back({bottom, ring(stacks - 1, j), ring(stacks - 1, j + 1)});
  return m;
}

TriangleMesh make_box(const Vec3& center, const Vec3& half_extent) {
  TriangleMesh m;
  const Vec3& h = half_extent;
  for (int i = 0; i < 8; ++i)
    m.vertices.push_back(center + Vec3{(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y,
                                       (i & 4) ? h.z : -h.z});
  // Outward-wound faces over the corner bit pattern.
  const uint32_t f[6][4] = {
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  };
  for (const auto& q : f) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriangleMesh make_capsule(const Vec3& p0, const Vec3& p1, double radius, int rings,
                          int segments) {
  TriangleMesh m;
  const Vec3 axis = normalized(p1 - p0);
  const Vec3 ref = std::abs(axis.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  const Vec3 u = normalized(cross(ref, axis));
  const Vec3 v = cross(axis, u);
  const double pi = M_PI;

  m.vertices.push_back(p0 - axis * radius);  // bottom pole
  for (int i = 1; i < rings; ++i) {
    const double phi = -pi / 2 + pi * i / rings;
    const Vec3& c = phi <= 0.0 ? p0 : p1;
    const double along = radius * std::sin(phi), r = radius * std::cos(phi);
    for (int j = 0; j < segments; ++j) {
      const double th = 2.0 * pi * j / segments;
      m.vertices.push_back(c + axis * along + (u * std::cos(th) + v * std::sin(th)) * r);
    }
  }
  m.vertices.push_back(p1 + axis * radius);  // top pole
  const uint32_t top = static_cast<uint32_t>(m.vertices.size() - 1);
  auto ring = [&](int i, int j) {
    return static_cast<uint32_t>(1 + (i - 1) * segments + j % segments);
  };
  for (int j = 0; j < segments; ++j) m.triangles.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i + 1 < rings; ++i) {
    for (int j = 0; j < segments; ++j) {
      const uint32_t a = ring(i, j), b = ring(i, j + 1), c = ring(i + 1, j),
                     d = ring(i + 1, j + 1);
      m.triangles.push_back({a, b, d});
      m.triangles.push_back({a, d, c});
    }
  }
  for (int j = 0; j < segments; ++j)
    m.triangles.push_back({top, ring(rings - 1, j), ring(rings - 1, j + 1)});
  return m;
}

TriangleMesh make_cone_shell(const Vec3& top_center, double top_radius,
                             const Vec3& bottom_center, double bottom_radius, int segments) {
  TriangleMesh m;
  const double pi = M_PI;
  for (int j = 0; j < segments; ++j) {
    const double th = 2.0 * pi * j / segments;
    m.vertices.push_back(top_center +
                         Vec3{top_radius * std::cos(th), 0, top_radius * std::sin(th)});
  }
  for (int j = 0; j < segments; ++j) {
    const double th = 2.0 * pi * j / segments;
    m.vertices.push_back(bottom_center +
                         Vec3{bottom_radius * std::cos(th), 0, bottom_radius * std::sin(th)});
  }
  auto top = [&](int j) { return static_cast<uint32_t>(j % segments); };
  auto bot = [&](int j) { return static_cast<uint32_t>(segments + j % segments); };
  for (int j = 0; j < segments; ++j) {
    m.triangles.push_back({top(j), bot(j), bot(j + 1)});
    m.triangles.push_back({top(j), bot(j + 1), top(j + 1)});
  }
  return m;
}

namespace {

void color_by_position(TriangleMesh& m) {
  const Aabb box = m.bounds();
  const Vec3 ext = box.extent();
  m.colors.resize(m.vertices.size());
  for (size_t i = 0; i < m.vertices.size(); ++i) {
    const Vec3 rel = m.vertices[i] - box.lo;
    auto channel = [](double num, double den) {
      return den > 0.0 ? 0.15 + 0.7 * (num / den) : 0.5;
    };
    m.colors[i] = {channel(rel.x, ext.x), channel(rel.y, ext.y), channel(rel.z, ext.z)};
  }
}

TriangleMesh toy_body_mesh(uint64_t seed) {
  const BodyModel model = generate_toy_model(5, 4000, seed);
  return evaluate(model, BodyParams{});
}

}  // namespace

std::vector<std::string> synth_scene_names() {
  return {"sphere", "cube", "nested-spheres", "nested-spheres-3", "toy-body", "loose-skirt"};
}

TriangleMesh synth_scene(const std::string& name, uint64_t seed) {
  TriangleMesh m;
  if (name == "sphere") {
    m = make_uv_sphere({0, 0, 0}, 1.0, 96, 192);
  } else if (name == "cube") {
    m = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
    // corner-on pose so no face is edge-on to the default view axis
    const Mat3 tilt = rodrigues({std::atan(1.0 / std::sqrt(2.0)), 0, 0});
    const Mat3 spin = rodrigues({0, M_PI / 4.0, 0});
    m.transform(tilt * spin, {0, 0, 0});
  } else if (name == "nested-spheres") {
    m = make_uv_sphere({0, 0, 0}, 1.0, 96, 192);
    m.append(make_uv_sphere({0, 0, 0}, 0.5, 48, 96));
  } else if (name == "nested-spheres-3") {
    m = make_uv_sphere({0, 0, 0}, 1.0, 96, 192);
    m.append(make_uv_sphere({0, 0, 0}, 0.7, 64, 128));
    m.append(make_uv_sphere({0, 0, 0}, 0.4, 48, 96));
  } else if (name == "toy-body") {
    m = toy_body_mesh(seed);
  } else if (name == "loose-skirt") {
    m = toy_body_mesh(seed);
    m.append(make_cone_shell({0, 0.05, 0}, 0.22, {0, -0.45, 0}, 0.5, 96));
  } else {
    std::string names;
    for (const auto& n : synth_scene_names()) names += (names.empty() ? "" : ", ") + n;
    throw Error("unknown scene '" + name + "' (valid: " + names + ")");
  }
  color_by_position(m);
  return m;
}

}  // namespace peelkit
