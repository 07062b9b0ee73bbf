#include "peelkit/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "peelkit/errors.hpp"
#include "peelkit/synth.hpp"

#include "binio.hpp"

namespace peelkit {

namespace {

constexpr uint32_t kLbsmVersion = 1;

// Walk every joint to the root; a cycle never terminates within J steps.
void check_parents(const std::vector<int32_t>& parents) {
  const int j_count = static_cast<int>(parents.size());
  int roots = 0;
  for (int j = 0; j < j_count; ++j) {
    const int32_t p = parents[j];
    if (p == -1) {
      ++roots;
      continue;
    }
    if (p < 0 || p >= j_count) throw Error("joint parent index out of range");
  }
  if (roots != 1) throw Error("joint tree needs exactly one root");
  for (int j = 0; j < j_count; ++j) {
    int cur = j, steps = 0;
    while (cur != -1) {
      if (++steps > j_count) throw Error("joint hierarchy has a cycle");
      cur = parents[cur];
    }
  }
}

Vec3 wrap_axis_angle(const Vec3& aa) {
  const double two_pi = 2.0 * M_PI;
  const double angle = norm(aa);
  if (angle < two_pi) return aa;
  const double wrapped = std::fmod(angle, two_pi);
  return aa * (wrapped / angle);
}

}  // namespace

void BodyModel::validate() const {
  const size_t v_count = template_verts.size();
  const size_t j_count = parents.size();
  if (v_count == 0) throw Error("body model has no vertices");
  if (j_count == 0) throw Error("body model has no joints");
  if (weights.size() != v_count * j_count)
    throw DimensionMismatch("skinning weight matrix is not V x J");
  if (joint_regressor.size() != j_count * v_count)
    throw DimensionMismatch("joint regressor is not J x V");
  if (shape_basis.size() % v_count != 0)
    throw DimensionMismatch("shape basis is not a whole number of V-sized slices");
  if (pose_basis.size() != 9 * (j_count - 1) * v_count)
    throw DimensionMismatch("pose basis must hold 9*(J-1) V-sized slices");

  for (size_t v = 0; v < v_count; ++v) {
    double sum = 0.0;
    for (size_t j = 0; j < j_count; ++j) {
      const double w = weights[v * j_count + j];
      if (w < 0.0) throw Error("negative skinning weight at vertex " + std::to_string(v));
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-5)
      throw Error("skinning weights at vertex " + std::to_string(v) + " sum to " +
                  std::to_string(sum));
  }
  for (size_t j = 0; j < j_count; ++j) {
    double sum = 0.0;
    for (size_t v = 0; v < v_count; ++v) sum += joint_regressor[j * v_count + v];
    if (std::abs(sum - 1.0) > 1e-4)
      throw Error("regressor row " + std::to_string(j) + " sums to " + std::to_string(sum));
  }
  check_parents(parents);
  for (const auto& t : triangles)
    for (uint32_t idx : t)
      if (idx >= v_count) throw Error("triangle index out of range");
}

TriangleMesh evaluate(const BodyModel& model, const BodyParams& params) {
  const size_t v_count = model.template_verts.size();
  const size_t j_count = model.parents.size();
  if (v_count == 0) throw Error("body model has no vertices");
  if (j_count == 0) throw Error("body model has no joints");
  if (model.weights.size() != v_count * j_count)
    throw DimensionMismatch("skinning weight matrix is not V x J");
  if (model.joint_regressor.size() != j_count * v_count)
    throw DimensionMismatch("joint regressor is not J x V");
  if (model.shape_basis.size() % v_count != 0)
    throw DimensionMismatch("shape basis is not a whole number of V-sized slices");
  const size_t s_count = model.shape_basis.size() / v_count;
  const size_t p_count = 9 * (j_count - 1);
  if (!model.pose_basis.empty() && model.pose_basis.size() != p_count * v_count)
    throw DimensionMismatch("pose basis must hold 9*(J-1) V-sized slices");
  if (!params.beta.empty() && params.beta.size() != s_count)
    throw DimensionMismatch("beta length does not match the shape basis");
  if (!params.theta.empty() && params.theta.size() != j_count)
    throw DimensionMismatch("theta length does not match the joint count");

  std::vector<Vec3> shaped(model.template_verts);
  for (size_t s = 0; s < params.beta.size(); ++s) {
    const double b = params.beta[s];
    if (b == 0.0) continue;
    const Vec3* slice = &model.shape_basis[s * v_count];
    for (size_t v = 0; v < v_count; ++v) shaped[v] += slice[v] * b;
  }

  std::vector<Vec3> joints(j_count, Vec3{0, 0, 0});
  for (size_t j = 0; j < j_count; ++j) {
    const double* row = &model.joint_regressor[j * v_count];
    Vec3 acc{0, 0, 0};
    for (size_t v = 0; v < v_count; ++v) {
      if (row[v] != 0.0) acc += shaped[v] * row[v];
    }
    joints[j] = acc;
  }

  std::vector<Mat3> rots(j_count, Mat3::identity());
  for (size_t j = 0; j < params.theta.size(); ++j)
    rots[j] = rodrigues(wrap_axis_angle(params.theta[j]));

  std::vector<Vec3> posed(shaped);
  if (!model.pose_basis.empty()) {
    size_t f = 0;
    for (size_t j = 0; j < j_count; ++j) {
      if (model.parents[j] == -1) continue;
      for (int e = 0; e < 9; ++e, ++f) {
        const double feat = rots[j].m[e] - (e % 4 == 0 ? 1.0 : 0.0);
        if (feat == 0.0) continue;
        const Vec3* slice = &model.pose_basis[f * v_count];
        for (size_t v = 0; v < v_count; ++v) posed[v] += slice[v] * feat;
      }
    }
  }

  // Per-joint vertex transforms composed along the chain. The relative form
  // keeps identity poses bit-exact: every parenthesized term cancels to zero
  // when the rotations are identity.
  std::vector<Mat3> arot(j_count);
  std::vector<Vec3> atrans(j_count);
  std::vector<char> done(j_count, 0);
  size_t remaining = j_count;
  while (remaining > 0) {
    bool progressed = false;
    for (size_t j = 0; j < j_count; ++j) {
      if (done[j]) continue;
      const int32_t p = model.parents[j];
      if (p < -1 || p >= static_cast<int32_t>(j_count))
        throw Error("joint parent index out of range");
      if (p >= 0 && !done[p]) continue;
      if (p == -1) {
        arot[j] = rots[j];
        atrans[j] = joints[j] - rots[j] * joints[j];
      } else {
        arot[j] = arot[p] * rots[j];
        const Vec3 rel = (joints[j] - joints[p]) + (joints[p] - rots[j] * joints[j]);
        atrans[j] = arot[p] * rel + atrans[p];
      }
      done[j] = 1;
      --remaining;
      progressed = true;
    }
    if (!progressed) throw Error("joint hierarchy has a cycle");
  }

  TriangleMesh out;
  out.vertices.resize(v_count);
  for (size_t v = 0; v < v_count; ++v) {
    const Vec3 pv = posed[v];
    Vec3 acc = pv;
    const double* wrow = &model.weights[v * j_count];
    for (size_t j = 0; j < j_count; ++j) {
      const double w = wrow[j];
      if (w == 0.0) continue;
      acc += ((arot[j] * pv - pv) + atrans[j]) * w;
    }
    out.vertices[v] = acc;
  }
  out.triangles = model.triangles;
  out.compute_vertex_normals();
  return out;
}

TriangleMesh apply_weak_perspective(const TriangleMesh& mesh, double s, double tx, double ty) {
  if (!(s > 0.0)) throw NonPositiveScale("weak perspective scale must be positive");
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = Vec3{s * (v.x + tx), s * (v.y + ty), s * v.z};
  // Uniform scaling plus translation leaves directions alone, so normals and
  // colors carry over unchanged.
  return out;
}

BodyModel generate_toy_model(int joints, int approx_vertices, uint64_t seed) {
  if (joints < 2) throw Error("toy model needs at least 2 joints");
  if (approx_vertices < 64 * (joints - 1)) approx_vertices = 64 * (joints - 1);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  BodyModel m;
  const int j_count = joints;
  std::vector<Vec3> joint_pos(j_count);
  for (int j = 0; j < j_count; ++j) {
    const double y = -0.55 + 1.1 * j / (j_count - 1);
    joint_pos[j] = {0.0, y, 0.0};
  }
  m.parents.assign(j_count, -1);
  for (int j = 1; j < j_count; ++j) m.parents[j] = j - 1;

  const int bones = j_count - 1;
  const int per_bone = approx_vertices / bones;
  const int segments = 16;
  const int rings = std::max(4, (per_bone - 2) / segments + 1);
  for (int b = 0; b < bones; ++b) {
    const double radius = 0.10;
    TriangleMesh cap = make_capsule(joint_pos[b], joint_pos[b + 1], radius, rings, segments);
    const uint32_t base = static_cast<uint32_t>(m.template_verts.size());
    m.template_verts.insert(m.template_verts.end(), cap.vertices.begin(), cap.vertices.end());
    for (const auto& t : cap.triangles)
      m.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }

  const size_t v_count = m.template_verts.size();
  m.weights.assign(v_count * j_count, 0.0);
  for (size_t v = 0; v < v_count; ++v) {
    int n0 = -1, n1 = -1;
    double d0 = 0.0, d1 = 0.0;
    for (int j = 0; j < j_count; ++j) {
      const double d = norm(m.template_verts[v] - joint_pos[j]);
      if (n0 < 0 || d < d0) {
        n1 = n0;
        d1 = d0;
        n0 = j;
        d0 = d;
      } else if (n1 < 0 || d < d1) {
        n1 = j;
        d1 = d;
      }
    }
    const double a = 1.0 / (d0 + 1e-3), b = 1.0 / (d1 + 1e-3);
    const double w0 = a / (a + b);
    m.weights[v * j_count + n0] = w0;
    m.weights[v * j_count + n1] = 1.0 - w0;
  }

  // Two shape directions: radial girth away from the spine, and elongation.
  m.shape_basis.resize(2 * v_count);
  for (size_t v = 0; v < v_count; ++v) {
    const Vec3& p = m.template_verts[v];
    const double len = std::hypot(p.x, p.z);
    m.shape_basis[v] =
        len < 1e-9 ? Vec3{0, 0, 0} : Vec3{0.05 * p.x / len, 0.0, 0.05 * p.z / len};
    m.shape_basis[v_count + v] = {0.0, p.y / 6.0, 0.0};
  }

  const size_t p_count = 9 * static_cast<size_t>(j_count - 1);
  m.pose_basis.resize(p_count * v_count);
  for (size_t i = 0; i < m.pose_basis.size(); ++i)
    m.pose_basis[i] = {0.002 * unit(rng), 0.002 * unit(rng), 0.002 * unit(rng)};

  m.joint_regressor.assign(static_cast<size_t>(j_count) * v_count, 0.0);
  const int k = 8;
  std::vector<std::pair<double, uint32_t>> order(v_count);
  for (int j = 0; j < j_count; ++j) {
    for (size_t v = 0; v < v_count; ++v)
      order[v] = {norm(m.template_verts[v] - joint_pos[j]), static_cast<uint32_t>(v)};
    std::partial_sort(order.begin(), order.begin() + k, order.end());
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += 1.0 / (order[i].first + 1e-3);
    for (int i = 0; i < k; ++i)
      m.joint_regressor[j * v_count + order[i].second] = 1.0 / (order[i].first + 1e-3) / sum;
  }

  m.validate();
  return m;
}

void save_lbsm(const BodyModel& model, const std::string& path) {
  model.validate();
  const uint32_t v_count = static_cast<uint32_t>(model.template_verts.size());
  const uint32_t j_count = static_cast<uint32_t>(model.parents.size());
  const uint32_t s_count = static_cast<uint32_t>(model.shape_basis.size() / v_count);
  const uint32_t p_count = static_cast<uint32_t>(model.pose_basis.size() / v_count);
  const uint32_t t_count = static_cast<uint32_t>(model.triangles.size());

  std::string out;
  out.reserve(64 + model.weights.size() * 4 + model.template_verts.size() * 12);
  out += "LBSM";
  binio::put_u(out, kLbsmVersion, 4);
  binio::put_u(out, v_count, 4);
  binio::put_u(out, j_count, 4);
  binio::put_u(out, s_count, 4);
  binio::put_u(out, p_count, 4);
  binio::put_u(out, t_count, 4);
  for (const Vec3& v : model.template_verts) binio::put_vec3_f32(out, v);
  for (double w : model.weights) binio::put_f32(out, static_cast<float>(w));
  for (const Vec3& v : model.shape_basis) binio::put_vec3_f32(out, v);
  for (const Vec3& v : model.pose_basis) binio::put_vec3_f32(out, v);
  for (double w : model.joint_regressor) binio::put_f32(out, static_cast<float>(w));
  for (int32_t p : model.parents) binio::put_i32(out, p);
  for (const auto& t : model.triangles)
    for (uint32_t idx : t) binio::put_u(out, idx, 4);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed for " + path);
}

BodyModel load_lbsm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  binio::ByteReader r{buf, path};

  r.need(4);
  if (std::memcmp(buf.data(), "LBSM", 4) != 0) throw ParseError(path + ": missing LBSM magic");
  r.pos = 4;
  const uint64_t version = r.u(4);
  if (version != kLbsmVersion)
    throw ParseError(path + ": unsupported version " + std::to_string(version));
  const uint64_t v_count = r.u(4);
  const uint64_t j_count = r.u(4);
  const uint64_t s_count = r.u(4);
  const uint64_t p_count = r.u(4);
  const uint64_t t_count = r.u(4);
  if (v_count == 0 || j_count == 0) throw ParseError(path + ": zero vertices or joints");
  // Keeps every size product far below the uint64 range.
  for (uint64_t d : {v_count, j_count, s_count, p_count, t_count})
    if (d > 100000000ull) throw ParseError(path + ": implausible dimension in header");

  const uint64_t floats = v_count * 3 + v_count * j_count + s_count * v_count * 3 +
                          p_count * v_count * 3 + j_count * v_count;
  const uint64_t expected = floats * 4 + j_count * 4 + t_count * 12;
  if (r.remaining() != expected)
    throw ParseError(path + ": body size " + std::to_string(r.remaining()) +
                     " does not match header (" + std::to_string(expected) + " bytes)");

  BodyModel m;
  m.template_verts.resize(v_count);
  for (auto& v : m.template_verts) v = r.vec3_f32();
  m.weights.resize(v_count * j_count);
  for (auto& w : m.weights) w = r.f32();
  m.shape_basis.resize(s_count * v_count);
  for (auto& v : m.shape_basis) v = r.vec3_f32();
  m.pose_basis.resize(p_count * v_count);
  for (auto& v : m.pose_basis) v = r.vec3_f32();
  m.joint_regressor.resize(j_count * v_count);
  for (auto& w : m.joint_regressor) w = r.f32();
  m.parents.resize(j_count);
  for (auto& p : m.parents) p = r.i32();
  m.triangles.resize(t_count);
  for (auto& t : m.triangles) {
    t[0] = static_cast<uint32_t>(r.u(4));
    t[1] = static_cast<uint32_t>(r.u(4));
    t[2] = static_cast<uint32_t>(r.u(4));
  }
  m.validate();
  return m;
}

}  // namespace peelkit
