#include "peelkit/pointcloud.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "peelkit/errors.hpp"
#include "peelkit/kdtree.hpp"
#include "peelkit/mesh_io.hpp"
#include "peelkit/parallel.hpp"

#include "binio.hpp"

namespace peelkit {

Aabb ColoredPointCloud::bounds() const {
  Aabb box;
  for (const Vec3& p : positions) box.expand(p);
  return box;
}

ColoredPointCloud backproject(const PeelStack& depth, const PeelStack* rgb,
                              const MaskStack* masks) {
  if (rgb && (rgb->width != depth.width || rgb->height != depth.height ||
              rgb->layers != depth.layers))
    throw ResolutionMismatch("color stack shape differs from the depth stack");
  if (masks && (masks->width != depth.width || masks->height != depth.height))
    throw ResolutionMismatch("mask resolution differs from the depth stack");
  const PeelStack* colors = rgb && rgb->has_rgb ? rgb : (depth.has_rgb ? &depth : nullptr);

  ColoredPointCloud cloud;
  for (int l = 0; l < depth.layers; ++l) {
    for (int y = 0; y < depth.height; ++y) {
      for (int x = 0; x < depth.width; ++x) {
        const float d = depth.d(l, y, x);
        if (d <= 0.0f) continue;
        if (masks && !masks->f(y, x)) continue;
        const Ray ray = depth.camera.pixel_ray(x, y);
        cloud.positions.push_back(ray.at(d));
        cloud.colors.push_back(colors ? Vec3{colors->c(l, 0, y, x), colors->c(l, 1, y, x),
                                             colors->c(l, 2, y, x)}
                                      : Vec3{0, 0, 0});
        cloud.layers.push_back(static_cast<uint8_t>(l));
      }
    }
  }
  return cloud;
}

size_t filter_outliers(ColoredPointCloud& cloud, int k, double threshold) {
  if (k < 1) throw Error("neighbor count must be positive");
  const size_t n = cloud.positions.size();
  if (n <= static_cast<size_t>(k))
    throw TooFewPoints("outlier filter needs more points than neighbors");
  const KdTree tree = KdTree::build(cloud.positions);
  const double scale = threshold * cloud.bounds().diagonal();

  std::vector<char> keep(n, 1);
  parallel_for(0, static_cast<int64_t>(n), [&](int64_t i) {
    thread_local std::vector<KdTree::Neighbor> nb;
    tree.knn(cloud.positions[static_cast<size_t>(i)], k + 1, nb);
    size_t self = nb.size();
    for (size_t m = 0; m < nb.size(); ++m) {
      if (nb[m].index == static_cast<uint32_t>(i)) {
        self = m;
        break;
      }
    }
    // With k+1 coincident closer points the query itself may be absent; the
    // k-th distance is then zero either way.
    if (self < nb.size()) nb.erase(nb.begin() + static_cast<ptrdiff_t>(self));
    else nb.pop_back();
    if (std::sqrt(nb.back().dist2) > scale) keep[static_cast<size_t>(i)] = 0;
  });

  ColoredPointCloud kept;
  const bool has_colors = !cloud.colors.empty();
  const bool has_normals = !cloud.normals.empty();
  const bool has_layers = !cloud.layers.empty();
  for (size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    kept.positions.push_back(cloud.positions[i]);
    if (has_colors) kept.colors.push_back(cloud.colors[i]);
    if (has_normals) kept.normals.push_back(cloud.normals[i]);
    if (has_layers) kept.layers.push_back(cloud.layers[i]);
  }
  const size_t removed = n - kept.positions.size();
  cloud = std::move(kept);
  return removed;
}

void estimate_normals(ColoredPointCloud& cloud, const Camera& camera, int k,
                      NormalOrientation orientation) {
  if (k < 3) k = 3;
  const size_t n = cloud.positions.size();
  if (n <= static_cast<size_t>(k))
    throw TooFewPoints("plane fitting needs more points than neighbors");
  const KdTree tree = KdTree::build(cloud.positions);
  const bool parity = orientation == NormalOrientation::LayerParity &&
                      cloud.layers.size() == n;
  cloud.normals.assign(n, Vec3{});

  parallel_for(0, static_cast<int64_t>(n), [&](int64_t idx) {
    const size_t i = static_cast<size_t>(idx);
    thread_local std::vector<KdTree::Neighbor> nb;
    tree.knn(cloud.positions[i], k, nb);
    Vec3 mean{};
    for (const auto& m : nb) mean += cloud.positions[m.index];
    mean = mean / static_cast<double>(nb.size());
    Mat3 cov;
    for (const auto& m : nb) {
      const Vec3 q = cloud.positions[m.index] - mean;
      cov(0, 0) += q.x * q.x;
      cov(0, 1) += q.x * q.y;
      cov(0, 2) += q.x * q.z;
      cov(1, 1) += q.y * q.y;
      cov(1, 2) += q.y * q.z;
      cov(2, 2) += q.z * q.z;
    }
    cov(1, 0) = cov(0, 1);
    cov(2, 0) = cov(0, 2);
    cov(2, 1) = cov(1, 2);

    std::array<double, 3> evals;
    Mat3 evecs;
    symmetric_eigen3(cov, evals, evecs);
    Vec3 normal = normalized({evecs(0, 0), evecs(1, 0), evecs(2, 0)});
    if (norm2(normal) == 0.0) normal = {0, 0, 1};

    Vec3 dir = camera.projection == Projection::Perspective
                   ? normalized(cloud.positions[i] - camera.center)
                   : camera.forward;
    if (norm2(dir) == 0.0) dir = camera.forward;
    const bool toward = !parity || cloud.layers[i] % 2 == 0;
    const double dp = dot(normal, dir);
    if (toward ? dp > 0.0 : dp < 0.0) normal = -normal;
    cloud.normals[i] = normal;
  });
}

void save_ply_cloud(const std::string& path, const ColoredPointCloud& cloud) {
  const size_t n = cloud.positions.size();
  const bool has_colors = !cloud.colors.empty();
  const bool has_normals = !cloud.normals.empty();
  const bool has_layers = !cloud.layers.empty();
  if (has_colors && cloud.colors.size() != n)
    throw DimensionMismatch("color count differs from position count");
  if (has_normals && cloud.normals.size() != n)
    throw DimensionMismatch("normal count differs from position count");
  if (has_layers && cloud.layers.size() != n)
    throw DimensionMismatch("layer count differs from position count");

  char line[80];
  std::snprintf(line, sizeof line, "comment scale bbox_diagonal=%.17g\n",
                cloud.bounds().diagonal());
  std::string out = "ply\nformat binary_little_endian 1.0\n";
  out += line;
  out += "element vertex " + std::to_string(n) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (has_normals) out += "property float nx\nproperty float ny\nproperty float nz\n";
  if (has_colors) out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  if (has_layers) out += "property uchar layer\n";
  out += "end_header\n";

  auto byte = [](double v) {
    return static_cast<char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (size_t i = 0; i < n; ++i) {
    binio::put_vec3_f32(out, cloud.positions[i]);
    if (has_normals) binio::put_vec3_f32(out, cloud.normals[i]);
    if (has_colors) {
      out.push_back(byte(cloud.colors[i].x));
      out.push_back(byte(cloud.colors[i].y));
      out.push_back(byte(cloud.colors[i].z));
    }
    if (has_layers) out.push_back(static_cast<char>(cloud.layers[i]));
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("write failed for " + path);
}

ColoredPointCloud load_ply_cloud(const std::string& path) {
  PlyData ply = load_ply(path);
  ColoredPointCloud cloud;
  cloud.positions = std::move(ply.positions);
  cloud.colors = std::move(ply.colors);
  cloud.normals = std::move(ply.normals);
  cloud.layers = std::move(ply.layers);
  return cloud;
}

}  // namespace peelkit
