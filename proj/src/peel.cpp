#include "peelkit/peel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "peelkit/errors.hpp"
#include "peelkit/parallel.hpp"

#include "binio.hpp"

namespace peelkit {

void PeelStack::allocate() {
  depth.assign(static_cast<size_t>(layers) * plane(), 0.0f);
  rgb.assign(has_rgb ? static_cast<size_t>(layers) * 3 * plane() : 0, 0.0f);
}

void MaskStack::allocate() {
  gamma.assign(static_cast<size_t>(layers) * plane(), 0);
  fg.assign(plane(), 0);
}

void ResidualStack::allocate() {
  delta.assign(static_cast<size_t>(layers) * plane(), 0.0f);
  conflict.assign(static_cast<size_t>(layers) * plane(), 0);
}

void AuxiliaryStack::allocate() {
  a.assign(static_cast<size_t>(layers) * plane(), 0.0f);
}

void PeelStack::check_invariants() const {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int i = 0; i < layers; ++i) {
        const float di = d(i, y, x);
        if (di < 0.0f)
          throw Error("negative depth at layer " + std::to_string(i + 1) + " pixel (" +
                      std::to_string(x) + "," + std::to_string(y) + ")");
        if (i > 0 && di > 0.0f) {
          const float dp = d(i - 1, y, x);
          if (!(dp > 0.0f) || !(di > dp))
            throw Error("layer order violated at layer " + std::to_string(i + 1) + " pixel (" +
                        std::to_string(x) + "," + std::to_string(y) + ")");
        }
        if (has_rgb && di == 0.0f) {
          if (c(i, 0, y, x) != 0.0f || c(i, 1, y, x) != 0.0f || c(i, 2, y, x) != 0.0f)
            throw Error("rgb without depth at layer " + std::to_string(i + 1) + " pixel (" +
                        std::to_string(x) + "," + std::to_string(y) + ")");
        }
      }
    }
  }
}

PeelStack render_peel(const TriangleMesh& mesh, const Bvh& bvh, const Camera& camera,
                      int layers, bool with_rgb, int64_t* overflow) {
  if (layers < 1) throw Error("peel rendering needs at least one layer");
  camera.validate();
  PeelStack s;
  s.width = camera.width;
  s.height = camera.height;
  s.layers = layers;
  s.has_rgb = with_rgb;
  s.camera = camera;
  s.allocate();

  const bool colored = mesh.has_colors();
  std::vector<int64_t> row_overflow(s.height, 0);
  parallel_for(0, s.height, [&](int64_t y) {
    for (int x = 0; x < s.width; ++x) {
      const Ray ray = camera.pixel_ray(x, static_cast<int>(y));
      const std::vector<Hit> hits = bvh.intersect_all(mesh, ray);
      int filled = 0;
      float last = 0.0f;
      for (const Hit& h : hits) {
        const float t = static_cast<float>(h.t);
        if (filled > 0 && t <= last) continue;  // merged by float32 rounding
        if (filled == layers) {
          row_overflow[y]++;
          break;
        }
        s.d(filled, static_cast<int>(y), x) = t;
        if (with_rgb) {
          Vec3 col{1.0, 1.0, 1.0};
          if (colored) {
            const auto& tri = mesh.triangles[h.triangle];
            col = mesh.colors[tri[0]] * h.b0 + mesh.colors[tri[1]] * h.b1 +
                  mesh.colors[tri[2]] * h.b2;
          }
          s.c(filled, 0, static_cast<int>(y), x) = static_cast<float>(col.x);
          s.c(filled, 1, static_cast<int>(y), x) = static_cast<float>(col.y);
          s.c(filled, 2, static_cast<int>(y), x) = static_cast<float>(col.z);
        }
        last = t;
        ++filled;
      }
    }
  });

  if (overflow) {
    int64_t total = 0;
    for (int64_t v : row_overflow) total += v;
    *overflow = total;
  }
  return s;
}

std::vector<float> render_normal_map(const TriangleMesh& mesh, const Bvh& bvh,
                                     const Camera& camera) {
  camera.validate();
  const std::vector<Vec3>* vertex_normals = &mesh.normals;
  std::vector<Vec3> computed;
  if (!mesh.has_normals()) {
    computed = area_weighted_normals(mesh);
    vertex_normals = &computed;
  }
  const int w = camera.width, h = camera.height;
  std::vector<float> out(static_cast<size_t>(w) * h * 3, 0.0f);
  parallel_for(0, h, [&](int64_t y) {
    for (int x = 0; x < w; ++x) {
      const Ray ray = camera.pixel_ray(x, static_cast<int>(y));
      const std::vector<Hit> hits = bvh.intersect_all(mesh, ray);
      if (hits.empty()) continue;
      const Hit& hit = hits[0];
      const auto& tri = mesh.triangles[hit.triangle];
      Vec3 n = (*vertex_normals)[tri[0]] * hit.b0 + (*vertex_normals)[tri[1]] * hit.b1 +
               (*vertex_normals)[tri[2]] * hit.b2;
      if (norm2(n) < 1e-24)
        n = mesh.triangle_normal(hit.triangle);
      else
        n = normalized(n);
      const Vec3 nc{dot(n, camera.right), dot(n, camera.up), -dot(n, camera.forward)};
      const size_t o = (static_cast<size_t>(y) * w + x) * 3;
      out[o] = static_cast<float>(nc.x);
      out[o + 1] = static_cast<float>(nc.y);
      out[o + 2] = static_cast<float>(nc.z);
    }
  });
  return out;
}

double pow2_at_least(double x) {
  if (!std::isfinite(x)) throw Error("cannot normalize a non-finite range");
  double f = 1.0;
  while (f < x) f *= 2.0;
  return f;
}

namespace {

constexpr uint16_t kPeelVersion = 1;

bool known_content(const std::string& tag) {
  return tag == "DPTH" || tag == "DRGB" || tag == "RD" || tag == "AUX" || tag == "GAM" ||
         tag == "FG";
}

using binio::ByteReader;
using binio::put_f32;
using binio::put_f64;
using binio::put_u;

void put_vec3(std::string& out, const Vec3& v) { binio::put_vec3_f64(out, v); }

void write_sidecar(const std::string& path, const PeelFile& f) {
  nlohmann::json j;
  j["magic"] = "PEEL";
  j["version"] = kPeelVersion;
  j["content"] = f.content;
  j["width"] = f.width;
  j["height"] = f.height;
  j["layers"] = f.layers;
  j["channels"] = f.channels;
  j["t_near"] = f.t_near;
  j["t_far"] = f.t_far;
  j["camera"] = {
      {"center", {f.camera.center.x, f.camera.center.y, f.camera.center.z}},
      {"right", {f.camera.right.x, f.camera.right.y, f.camera.right.z}},
      {"up", {f.camera.up.x, f.camera.up.y, f.camera.up.z}},
      {"forward", {f.camera.forward.x, f.camera.forward.y, f.camera.forward.z}},
      {"projection",
       f.camera.projection == Projection::Perspective ? "perspective" : "orthographic"},
      {"param", f.camera.param},
  };
  std::ofstream out(path + ".json", std::ios::binary);
  if (!out) throw IoError("cannot write " + path + ".json");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path + ".json");
}

}  // namespace

void save_peel_file(const std::string& path, const PeelFile& file) {
  if (!known_content(file.content)) throw Error("unknown container content '" + file.content + "'");
  if (file.content.size() > 4) throw Error("content tag longer than 4 bytes");
  const size_t expected = static_cast<size_t>(file.layers) * file.channels * file.width *
                          file.height;
  if (file.planes.size() != expected)
    throw Error("plane data size mismatch for " + path + ": have " +
                std::to_string(file.planes.size()) + ", need " + std::to_string(expected));

  std::string out;
  out.reserve(80 + file.planes.size() * 4);
  out += "PEEL";
  put_u(out, kPeelVersion, 2);
  put_u(out, file.width, 4);
  put_u(out, file.height, 4);
  put_u(out, file.layers, 1);
  put_u(out, file.channels, 1);
  std::string tag = file.content;
  tag.resize(4, ' ');
  out += tag;
  put_f64(out, file.t_near);
  put_f64(out, file.t_far);
  put_vec3(out, file.camera.center);
  put_vec3(out, file.camera.right);
  put_vec3(out, file.camera.up);
  put_vec3(out, file.camera.forward);
  put_u(out, static_cast<uint8_t>(file.camera.projection), 1);
  put_f64(out, file.camera.param);
  for (float v : file.planes) put_f32(out, v);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed for " + path);
  os.close();
  write_sidecar(path, file);
}

PeelFile load_peel_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r{buf, path};

  r.need(4);
  if (std::memcmp(buf.data(), "PEEL", 4) != 0) throw ParseError(path + ": missing PEEL magic");
  r.pos = 4;
  const uint64_t version = r.u(2);
  if (version != kPeelVersion)
    throw ParseError(path + ": unsupported version " + std::to_string(version));

  PeelFile f;
  f.width = static_cast<uint32_t>(r.u(4));
  f.height = static_cast<uint32_t>(r.u(4));
  f.layers = static_cast<uint8_t>(r.u(1));
  f.channels = static_cast<uint8_t>(r.u(1));
  r.need(4);
  f.content.assign(buf.data() + r.pos, 4);
  r.pos += 4;
  while (!f.content.empty() && f.content.back() == ' ') f.content.pop_back();
  if (!known_content(f.content)) throw ParseError(path + ": unknown content '" + f.content + "'");
  f.t_near = r.f64();
  f.t_far = r.f64();
  f.camera.center = r.vec3_f64();
  f.camera.right = r.vec3_f64();
  f.camera.up = r.vec3_f64();
  f.camera.forward = r.vec3_f64();
  const uint64_t proj = r.u(1);
  if (proj > 1) throw ParseError(path + ": unknown projection code " + std::to_string(proj));
  f.camera.projection = static_cast<Projection>(proj);
  f.camera.param = r.f64();
  f.camera.width = static_cast<int>(f.width);
  f.camera.height = static_cast<int>(f.height);

  if (f.layers == 0 || f.channels == 0) throw ParseError(path + ": zero layers or channels");
  const size_t expected = static_cast<size_t>(f.layers) * f.channels * f.width * f.height;
  if (buf.size() - r.pos != expected * 4)
    throw ParseError(path + ": body size " + std::to_string(buf.size() - r.pos) +
                     " does not match header (" + std::to_string(expected * 4) + " bytes)");
  f.planes.resize(expected);
  for (size_t i = 0; i < expected; ++i) f.planes[i] = r.f32();
  return f;
}

void save_peel(const std::string& path, const PeelStack& stack) {
  PeelFile f;
  f.content = stack.has_rgb ? "DRGB" : "DPTH";
  f.width = static_cast<uint32_t>(stack.width);
  f.height = static_cast<uint32_t>(stack.height);
  f.layers = static_cast<uint8_t>(stack.layers);
  f.channels = stack.has_rgb ? 4 : 1;
  f.camera = stack.camera;
  float maxd = 0.0f;
  for (float v : stack.depth) maxd = std::max(maxd, v);
  f.t_near = 0.0;
  f.t_far = pow2_at_least(maxd);
  const float scale = static_cast<float>(f.t_far);
  const size_t plane = stack.plane();
  f.planes.resize(static_cast<size_t>(f.layers) * f.channels * plane);
  for (int l = 0; l < stack.layers; ++l) {
    float* dst = f.planes.data() + static_cast<size_t>(l) * f.channels * plane;
    const float* src = stack.depth.data() + static_cast<size_t>(l) * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] = src[i] / scale;
    if (stack.has_rgb)
      std::memcpy(dst + plane, stack.rgb.data() + static_cast<size_t>(l) * 3 * plane,
                  3 * plane * sizeof(float));
  }
  save_peel_file(path, f);
}

PeelStack load_peel(const std::string& path) {
  PeelFile f = load_peel_file(path);
  if (f.content != "DPTH" && f.content != "DRGB")
    throw ParseError(path + ": content '" + f.content + "' is not a depth stack");
  const uint8_t want = f.content == "DRGB" ? 4 : 1;
  if (f.channels != want)
    throw ParseError(path + ": channel count " + std::to_string(f.channels) +
                     " inconsistent with content " + f.content);
  PeelStack s;
  s.width = static_cast<int>(f.width);
  s.height = static_cast<int>(f.height);
  s.layers = f.layers;
  s.has_rgb = f.content == "DRGB";
  s.camera = f.camera;
  s.allocate();
  const size_t plane = s.plane();
  const float scale = static_cast<float>(f.t_far - f.t_near);
  const float base = static_cast<float>(f.t_near);
  for (int l = 0; l < s.layers; ++l) {
    const float* src = f.planes.data() + static_cast<size_t>(l) * f.channels * plane;
    float* dst = s.depth.data() + static_cast<size_t>(l) * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] = src[i] == 0.0f ? 0.0f : base + src[i] * scale;
    if (s.has_rgb)
      std::memcpy(s.rgb.data() + static_cast<size_t>(l) * 3 * plane, src + plane,
                  3 * plane * sizeof(float));
  }
  return s;
}

void save_residual(const std::string& path, const ResidualStack& rd, const Camera& camera) {
  PeelFile f;
  f.content = "RD";
  f.width = static_cast<uint32_t>(rd.width);
  f.height = static_cast<uint32_t>(rd.height);
  f.layers = static_cast<uint8_t>(rd.layers);
  f.channels = 2;
  f.camera = camera;
  float maxabs = 0.0f;
  for (float v : rd.delta) maxabs = std::max(maxabs, std::abs(v));
  f.t_near = 0.0;
  f.t_far = pow2_at_least(maxabs);
  const float scale = static_cast<float>(f.t_far);
  const size_t plane = rd.plane();
  f.planes.resize(static_cast<size_t>(f.layers) * 2 * plane);
  for (int l = 0; l < rd.layers; ++l) {
    float* dst = f.planes.data() + static_cast<size_t>(l) * 2 * plane;
    const float* src = rd.delta.data() + static_cast<size_t>(l) * plane;
    const uint8_t* conf = rd.conflict.data() + static_cast<size_t>(l) * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] = src[i] / scale;
    for (size_t i = 0; i < plane; ++i) dst[plane + i] = conf[i] ? 1.0f : 0.0f;
  }
  save_peel_file(path, f);
}

ResidualStack load_residual(const std::string& path, Camera* camera) {
  PeelFile f = load_peel_file(path);
  if (f.content != "RD") throw ParseError(path + ": content '" + f.content + "' is not residual");
  if (f.channels != 2)
    throw ParseError(path + ": residual container needs 2 channels, has " +
                     std::to_string(f.channels));
  ResidualStack rd;
  rd.width = static_cast<int>(f.width);
  rd.height = static_cast<int>(f.height);
  rd.layers = f.layers;
  rd.allocate();
  const size_t plane = rd.plane();
  const float scale = static_cast<float>(f.t_far - f.t_near);
  for (int l = 0; l < rd.layers; ++l) {
    const float* src = f.planes.data() + static_cast<size_t>(l) * 2 * plane;
    float* dst = rd.delta.data() + static_cast<size_t>(l) * plane;
    uint8_t* conf = rd.conflict.data() + static_cast<size_t>(l) * plane;
    for (size_t i = 0; i < plane; ++i) dst[i] = src[i] * scale;
    for (size_t i = 0; i < plane; ++i) conf[i] = src[plane + i] > 0.5f ? 1 : 0;
  }
  if (camera) *camera = f.camera;
  return rd;
}

void save_auxiliary(const std::string& path, const AuxiliaryStack& aux, const Camera& camera) {
  PeelFile f;
  f.content = "AUX";
  f.width = static_cast<uint32_t>(aux.width);
  f.height = static_cast<uint32_t>(aux.height);
  f.layers = static_cast<uint8_t>(aux.layers);
  f.channels = 1;
  f.camera = camera;
  float maxd = 0.0f;
  for (float v : aux.a) maxd = std::max(maxd, v);
  f.t_near = 0.0;
  f.t_far = pow2_at_least(maxd);
  const float scale = static_cast<float>(f.t_far);
  f.planes.resize(aux.a.size());
  for (size_t i = 0; i < aux.a.size(); ++i) f.planes[i] = aux.a[i] / scale;
  save_peel_file(path, f);
}

AuxiliaryStack load_auxiliary(const std::string& path, Camera* camera) {
  PeelFile f = load_peel_file(path);
  if (f.content != "AUX") throw ParseError(path + ": content '" + f.content + "' is not auxiliary");
  if (f.channels != 1) throw ParseError(path + ": auxiliary container needs 1 channel");
  AuxiliaryStack aux;
  aux.width = static_cast<int>(f.width);
  aux.height = static_cast<int>(f.height);
  aux.layers = f.layers;
  aux.allocate();
  const float scale = static_cast<float>(f.t_far - f.t_near);
  const float base = static_cast<float>(f.t_near);
  for (size_t i = 0; i < f.planes.size(); ++i)
    aux.a[i] = f.planes[i] == 0.0f ? 0.0f : base + f.planes[i] * scale;
  if (camera) *camera = f.camera;
  return aux;
}

void save_masks(const std::string& gamma_path, const std::string& fg_path, const MaskStack& masks,
                const Camera& camera) {
  PeelFile g;
  g.content = "GAM";
  g.width = static_cast<uint32_t>(masks.width);
  g.height = static_cast<uint32_t>(masks.height);
  g.layers = static_cast<uint8_t>(masks.layers);
  g.channels = 1;
  g.camera = camera;
  g.t_near = 0.0;
  g.t_far = 1.0;
  g.planes.resize(masks.gamma.size());
  for (size_t i = 0; i < masks.gamma.size(); ++i) g.planes[i] = masks.gamma[i] ? 1.0f : 0.0f;
  save_peel_file(gamma_path, g);

  PeelFile f;
  f.content = "FG";
  f.width = g.width;
  f.height = g.height;
  f.layers = 1;
  f.channels = 1;
  f.camera = camera;
  f.t_near = 0.0;
  f.t_far = 1.0;
  f.planes.resize(masks.fg.size());
  for (size_t i = 0; i < masks.fg.size(); ++i) f.planes[i] = masks.fg[i] ? 1.0f : 0.0f;
  save_peel_file(fg_path, f);
}

MaskStack load_masks(const std::string& gamma_path, const std::string& fg_path) {
  PeelFile g = load_peel_file(gamma_path);
  if (g.content != "GAM")
    throw ParseError(gamma_path + ": content '" + g.content + "' is not a layer mask");
  PeelFile f = load_peel_file(fg_path);
  if (f.content != "FG")
    throw ParseError(fg_path + ": content '" + f.content + "' is not a foreground mask");
  if (g.width != f.width || g.height != f.height)
    throw ResolutionMismatch("mask resolutions differ: " + gamma_path + " vs " + fg_path);
  if (f.layers != 1) throw ParseError(fg_path + ": foreground mask must have exactly 1 layer");

  MaskStack m;
  m.width = static_cast<int>(g.width);
  m.height = static_cast<int>(g.height);
  m.layers = g.layers;
  m.allocate();
  for (size_t i = 0; i < g.planes.size(); ++i) m.gamma[i] = g.planes[i] > 0.5f ? 1 : 0;
  for (size_t i = 0; i < f.planes.size(); ++i) m.fg[i] = f.planes[i] > 0.5f ? 1 : 0;
  return m;
}

}  // namespace peelkit
