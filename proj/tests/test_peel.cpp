#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "peelkit/bvh.hpp"
#include "peelkit/errors.hpp"
#include "peelkit/peel.hpp"
#include "peelkit/synth.hpp"

using namespace peelkit;

namespace {

std::string tmp_file(const std::string& name) {
  auto dir = std::filesystem::current_path() / "peel_tmp";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

PeelStack render_scene(const std::string& scene, const Camera& cam, int layers,
                       bool with_rgb = true, int64_t* overflow = nullptr) {
  TriangleMesh mesh = synth_scene(scene, 3);
  Bvh bvh = Bvh::build(mesh);
  return render_peel(mesh, bvh, cam, layers, with_rgb, overflow);
}

double ray_segment_dist(const Ray& ray, const Vec3& a, const Vec3& b) {
  // Closest approach between an infinite ray (t >= 0) and the segment ab.
  const Vec3 u = ray.direction;
  const Vec3 v = b - a;
  const Vec3 w = ray.origin - a;
  const double uu = dot(u, u), uv = dot(u, v), vv = dot(v, v);
  const double uw = dot(u, w), vw = dot(v, w);
  const double den = uu * vv - uv * uv;
  double s, t;
  if (den < 1e-15) {
    s = 0.0;
    t = vv > 0 ? std::clamp(vw / vv, 0.0, 1.0) : 0.0;
  } else {
    s = (uv * vw - vv * uw) / den;
    t = (uu * vw - uv * uw) / den;
    t = std::clamp(t, 0.0, 1.0);
    s = std::max(0.0, (t * uv - uw) / uu);
    t = vv > 0 ? std::clamp((s * uv + vw) / vv, 0.0, 1.0) : 0.0;
  }
  return norm(ray.origin + u * s - (a + v * t));
}

}  // namespace

TEST_CASE("orthographic cube fills exactly two layers at 9.5 and 10.5 on the axis") {
  Camera cam = Camera::standard(Projection::Orthographic, 1.5, 65, 65);
  TriangleMesh mesh = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
  Bvh bvh = Bvh::build(mesh);
  PeelStack s = render_peel(mesh, bvh, cam, 4, false);
  CHECK(s.width == 65);
  CHECK(s.height == 65);
  CHECK(s.layers == 4);
  CHECK(!s.has_rgb);
  CHECK(s.d(0, 32, 32) == 9.5f);
  CHECK(s.d(1, 32, 32) == 10.5f);
  CHECK(s.d(2, 32, 32) == 0.0f);
  CHECK(s.d(3, 32, 32) == 0.0f);
  CHECK(s.d(0, 0, 0) == 0.0f);
  s.check_invariants();
}

TEST_CASE("perspective nested spheres shell depths match the analytic center ray") {
  Camera cam = Camera::standard(Projection::Perspective, 15.0 * M_PI / 180.0, 255, 255);
  PeelStack s = render_scene("nested-spheres", cam, 4);
  const double expect[4] = {9.0, 9.5, 10.5, 11.0};
  for (int l = 0; l < 4; ++l)
    CHECK(std::abs(s.d(l, 127, 127) - expect[l]) < 1e-3);
  s.check_invariants();
}

TEST_CASE("overflow counts pixels with more surfaces than layers") {
  Camera cam = Camera::standard(Projection::Perspective, 15.0 * M_PI / 180.0, 128, 128);
  int64_t overflow = -1;
  render_scene("nested-spheres", cam, 2, false, &overflow);
  CHECK(overflow > 0);
  int64_t none = -1;
  render_scene("nested-spheres", cam, 4, false, &none);
  CHECK(none == 0);
}

TEST_CASE("rendering rejects non-positive layer counts and bad cameras") {
  TriangleMesh mesh = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
  Bvh bvh = Bvh::build(mesh);
  Camera cam = Camera::standard(Projection::Perspective, 0.3, 32, 32);
  CHECK_THROWS_AS(render_peel(mesh, bvh, cam, 0), Error);
  cam.width = 0;
  CHECK_THROWS_AS(render_peel(mesh, bvh, cam, 2), Error);
}

TEST_CASE("hit colors interpolate vertex colors barycentrically") {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  mesh.colors = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  mesh.triangles = {{0, 1, 2}};
  Bvh bvh = Bvh::build(mesh);
  Camera cam = Camera::standard(Projection::Orthographic, 1.0, 1, 1);
  cam.center = {0.2, 0.3, 10.0};
  PeelStack s = render_peel(mesh, bvh, cam, 1, true);
  REQUIRE(s.has_rgb);
  CHECK(s.d(0, 0, 0) == 10.0f);
  CHECK(s.c(0, 0, 0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.c(0, 1, 0, 0) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(s.c(0, 2, 0, 0) == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("colorless meshes render white at hits and black rgb elsewhere") {
  Camera cam = Camera::standard(Projection::Orthographic, 1.5, 33, 33);
  TriangleMesh mesh = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
  Bvh bvh = Bvh::build(mesh);
  PeelStack s = render_peel(mesh, bvh, cam, 2, true);
  CHECK(s.c(0, 0, 16, 16) == 1.0f);
  CHECK(s.c(0, 1, 16, 16) == 1.0f);
  CHECK(s.c(0, 2, 16, 16) == 1.0f);
  CHECK(s.d(0, 0, 0) == 0.0f);
  CHECK(s.c(0, 0, 0, 0) == 0.0f);
  s.check_invariants();
}

TEST_CASE("check_invariants rejects gaps, unsorted layers, and rgb without depth") {
  Camera cam = Camera::standard(Projection::Orthographic, 1.5, 33, 33);
  TriangleMesh mesh = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
  Bvh bvh = Bvh::build(mesh);
  PeelStack good = render_peel(mesh, bvh, cam, 3, true);
  CHECK_NOTHROW(good.check_invariants());

  PeelStack gap = good;
  gap.d(1, 0, 0) = 5.0f;
  CHECK_THROWS_AS(gap.check_invariants(), Error);

  PeelStack unsorted = good;
  unsorted.d(0, 16, 16) = 10.5f;
  unsorted.d(1, 16, 16) = 9.5f;
  CHECK_THROWS_AS(unsorted.check_invariants(), Error);

  PeelStack ghost = good;
  ghost.c(0, 1, 0, 0) = 0.5f;
  CHECK_THROWS_AS(ghost.check_invariants(), Error);
}

TEST_CASE("toy body silhouette matches the analytic capsule outline") {
  Camera cam = Camera::standard(Projection::Perspective, 15.0 * M_PI / 180.0, 128, 128);
  PeelStack s = render_scene("toy-body", cam, 4, false);
  const Vec3 a{0, -0.55, 0}, b{0, 0.55, 0};
  const double band = 0.004;
  int must_hit = 0, must_miss = 0;
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      const double dist = ray_segment_dist(cam.pixel_ray(x, y), a, b);
      if (dist <= 0.1 - band) {
        CHECK(s.d(0, y, x) > 0.0f);
        ++must_hit;
      } else if (dist > 0.1) {
        CHECK(s.d(0, y, x) == 0.0f);
        ++must_miss;
      }
    }
  }
  CHECK(must_hit > 300);
  CHECK(must_miss > 10000);
}

TEST_CASE("a ray through the middle of a limb sees exactly the front and back wall") {
  Camera cam = Camera::standard(Projection::Perspective, 15.0 * M_PI / 180.0, 128, 128);
  PeelStack s = render_scene("toy-body", cam, 4, false);
  // Joints sit at y = -0.55 + 0.275 k; aim between the caps of the lowest
  // bone where the shape is a plain cylinder of radius 0.1.
  double px = 0, py = 0;
  cam.project({0, -0.4125, 0}, px, py);
  const int x = int(std::lround(px)), y = int(std::lround(py));
  CHECK(s.d(0, y, x) > 9.88f);
  CHECK(s.d(0, y, x) < 9.92f);
  CHECK(s.d(1, y, x) > 10.08f);
  CHECK(s.d(1, y, x) < 10.12f);
  CHECK(s.d(2, y, x) == 0.0f);
  CHECK(s.d(3, y, x) == 0.0f);
}

TEST_CASE("normal maps encode camera-space first-hit normals") {
  Camera cam = Camera::standard(Projection::Orthographic, 1.5, 65, 65);
  TriangleMesh quad;
  quad.vertices = {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
  quad.triangles = {{0, 1, 2}, {0, 2, 3}};
  Bvh qb = Bvh::build(quad);
  std::vector<float> nm = render_normal_map(quad, qb, cam);
  REQUIRE(nm.size() == 65u * 65u * 3u);
  const size_t center = (32u * 65u + 32u) * 3u;
  CHECK(nm[center] == 0.0f);
  CHECK(nm[center + 1] == 0.0f);
  CHECK(nm[center + 2] == 1.0f);

  TriangleMesh sphere = make_uv_sphere({0, 0, 0}, 1.0, 96, 192);
  Bvh sb = Bvh::build(sphere);
  std::vector<float> sm = render_normal_map(sphere, sb, cam);
  CHECK(std::abs(sm[center] - 0.0f) < 1e-3);
  CHECK(std::abs(sm[center + 1] - 0.0f) < 1e-3);
  CHECK(std::abs(sm[center + 2] - 1.0f) < 1e-3);
  int rim_x = -1;
  for (int x = 0; x < 65; ++x) {
    const size_t o = (32u * 65u + x) * 3u;
    if (sm[o] != 0.0f || sm[o + 1] != 0.0f || sm[o + 2] != 0.0f) {
      rim_x = x;
      break;
    }
  }
  REQUIRE(rim_x >= 0);
  const size_t rim = (32u * 65u + rim_x) * 3u;
  CHECK(sm[rim + 2] < 0.2f);
  const double len = std::sqrt(double(sm[rim]) * sm[rim] + double(sm[rim + 1]) * sm[rim + 1] +
                               double(sm[rim + 2]) * sm[rim + 2]);
  CHECK(len == doctest::Approx(1.0).epsilon(1e-6));
  const size_t corner = 0;
  CHECK(sm[corner] == 0.0f);
  CHECK(sm[corner + 1] == 0.0f);
  CHECK(sm[corner + 2] == 0.0f);
}

TEST_CASE("depth stacks round trip through the container bit-exact") {
  Camera cam = Camera::standard(Projection::Perspective, 15.0 * M_PI / 180.0, 64, 64);
  PeelStack s = render_scene("nested-spheres", cam, 4, true);
  const std::string path = tmp_file("spheres.peel");
  save_peel(path, s);
  PeelStack back = load_peel(path);
  CHECK(back.width == s.width);
  CHECK(back.height == s.height);
  CHECK(back.layers == s.layers);
  CHECK(back.has_rgb == s.has_rgb);
  CHECK(back.camera == s.camera);
  REQUIRE(back.depth.size() == s.depth.size());
  for (size_t i = 0; i < s.depth.size(); ++i) CHECK(back.depth[i] == s.depth[i]);
  REQUIRE(back.rgb.size() == s.rgb.size());
  for (size_t i = 0; i < s.rgb.size(); ++i) CHECK(back.rgb[i] == s.rgb[i]);

  PeelFile raw = load_peel_file(path);
  CHECK(raw.content == "DRGB");
  CHECK(raw.t_near == 0.0);
  CHECK(raw.t_far == 16.0);
}

TEST_CASE("the sidecar manifest mirrors the container header") {
  Camera cam = Camera::standard(Projection::Orthographic, 1.5, 16, 8);
  TriangleMesh mesh = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
  Bvh bvh = Bvh::build(mesh);
  PeelStack s = render_peel(mesh, bvh, cam, 2, false);
  const std::string path = tmp_file("cube.peel");
  save_peel(path, s);
  std::ifstream in(path + ".json");
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  CHECK(j["magic"] == "PEEL");
  CHECK(j["content"] == "DPTH");
  CHECK(j["width"] == 16);
  CHECK(j["height"] == 8);
  CHECK(j["layers"] == 2);
  CHECK(j["camera"]["projection"] == "orthographic");
  CHECK(j["camera"]["param"] == 1.5);
}

TEST_CASE("residual, auxiliary, and mask containers round trip") {
  ResidualStack rd;
  rd.width = 5;
  rd.height = 4;
  rd.layers = 3;
  rd.allocate();
  AuxiliaryStack aux;
  aux.width = 5;
  aux.height = 4;
  aux.layers = 3;
  aux.allocate();
  MaskStack masks;
  masks.width = 5;
  masks.height = 4;
  masks.layers = 3;
  masks.allocate();
  for (size_t i = 0; i < rd.delta.size(); ++i) {
    rd.delta[i] = float(int(i % 7) - 3) * 0.25f;
    rd.conflict[i] = i % 11 == 0;
    if (rd.conflict[i]) rd.delta[i] = 0.0f;
    aux.a[i] = float(i % 5) * 1.5f;
    masks.gamma[i] = i % 3 == 0;
  }
  for (size_t i = 0; i < masks.fg.size(); ++i) masks.fg[i] = i % 2;

  Camera cam = Camera::standard(Projection::Perspective, 0.3, 5, 4);
  const std::string rd_path = tmp_file("stack.rd");
  save_residual(rd_path, rd, cam);
  Camera rd_cam;
  ResidualStack rd_back = load_residual(rd_path, &rd_cam);
  CHECK(rd_cam == cam);
  CHECK(rd_back.layers == 3);
  for (size_t i = 0; i < rd.delta.size(); ++i) {
    CHECK(rd_back.delta[i] == rd.delta[i]);
    CHECK(rd_back.conflict[i] == rd.conflict[i]);
  }
  PeelFile rd_raw = load_peel_file(rd_path);
  CHECK(rd_raw.content == "RD");
  CHECK(rd_raw.channels == 2);

  const std::string aux_path = tmp_file("stack.aux");
  save_auxiliary(aux_path, aux, cam);
  AuxiliaryStack aux_back = load_auxiliary(aux_path);
  for (size_t i = 0; i < aux.a.size(); ++i) CHECK(aux_back.a[i] == aux.a[i]);

  const std::string gam_path = tmp_file("stack.gam");
  const std::string fg_path = tmp_file("stack.fg");
  save_masks(gam_path, fg_path, masks, cam);
  MaskStack masks_back = load_masks(gam_path, fg_path);
  CHECK(masks_back.layers == 3);
  for (size_t i = 0; i < masks.gamma.size(); ++i) CHECK(masks_back.gamma[i] == masks.gamma[i]);
  for (size_t i = 0; i < masks.fg.size(); ++i) CHECK(masks_back.fg[i] == masks.fg[i]);
}

TEST_CASE("container loading raises typed errors for wrong content and damage") {
  Camera cam = Camera::standard(Projection::Orthographic, 1.5, 8, 8);
  TriangleMesh mesh = make_box({0, 0, 0}, {0.5, 0.5, 0.5});
  Bvh bvh = Bvh::build(mesh);
  PeelStack s = render_peel(mesh, bvh, cam, 2, false);
  const std::string path = tmp_file("typed.peel");
  save_peel(path, s);

  CHECK_THROWS_AS(load_residual(path), ParseError);
  CHECK_THROWS_AS(load_auxiliary(path), ParseError);
  CHECK_THROWS_AS(load_peel_file(tmp_file("absent.peel")), IoError);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  std::ofstream bad(tmp_file("magic.peel"), std::ios::binary);
  bad << "XXXX" << bytes.substr(4);
  bad.close();
  CHECK_THROWS_AS(load_peel_file(tmp_file("magic.peel")), ParseError);
  std::ofstream cut(tmp_file("cut.peel"), std::ios::binary);
  cut << bytes.substr(0, bytes.size() - 5);
  cut.close();
  CHECK_THROWS_AS(load_peel_file(tmp_file("cut.peel")), ParseError);
}

TEST_CASE("rendering is byte-identical across thread counts") {
  Camera cam = Camera::standard(Projection::Perspective, 15.0 * M_PI / 180.0, 96, 96);
  setenv("PEELKIT_THREADS", "1", 1);
  PeelStack serial = render_scene("loose-skirt", cam, 4);
  std::vector<float> serial_normals;
  {
    TriangleMesh mesh = synth_scene("loose-skirt", 3);
    Bvh bvh = Bvh::build(mesh);
    serial_normals = render_normal_map(mesh, bvh, cam);
  }
  setenv("PEELKIT_THREADS", "7", 1);
  PeelStack threaded = render_scene("loose-skirt", cam, 4);
  std::vector<float> threaded_normals;
  {
    TriangleMesh mesh = synth_scene("loose-skirt", 3);
    Bvh bvh = Bvh::build(mesh);
    threaded_normals = render_normal_map(mesh, bvh, cam);
  }
  unsetenv("PEELKIT_THREADS");
  REQUIRE(serial.depth.size() == threaded.depth.size());
  for (size_t i = 0; i < serial.depth.size(); ++i) CHECK(serial.depth[i] == threaded.depth[i]);
  for (size_t i = 0; i < serial.rgb.size(); ++i) CHECK(serial.rgb[i] == threaded.rgb[i]);
  REQUIRE(serial_normals.size() == threaded_normals.size());
  for (size_t i = 0; i < serial_normals.size(); ++i)
    CHECK(serial_normals[i] == threaded_normals[i]);
}

TEST_CASE("pow2_at_least snaps to the next power of two") {
  CHECK(pow2_at_least(0.3) == 1.0);
  CHECK(pow2_at_least(1.0) == 1.0);
  CHECK(pow2_at_least(1.5) == 2.0);
  CHECK(pow2_at_least(11.0) == 16.0);
  CHECK(pow2_at_least(16.0) == 16.0);
  CHECK(pow2_at_least(16.001) == 32.0);
}
