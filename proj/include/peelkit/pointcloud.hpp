#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peelkit/camera.hpp"
#include "peelkit/peel.hpp"

namespace peelkit {

// Point set lifted from a depth-layer stack. Parallel arrays; colors (RGB in
// [0,1]) and layer tags are always present after backprojection, normals
// only after estimation.
struct ColoredPointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;
  std::vector<Vec3> normals;
  std::vector<uint8_t> layers;

  size_t size() const { return positions.size(); }
  Aabb bounds() const;
};

// One point per filled depth sample, placed along the pixel ray at the
// stored depth. Colors come from `rgb` when given (falling back to the depth
// stack's own color planes, then black); when masks are given, pixels
// outside the foreground are skipped. Each point is tagged with its source
// layer.
ColoredPointCloud backproject(const PeelStack& depth, const PeelStack* rgb = nullptr,
                              const MaskStack* masks = nullptr);

// Removes every point whose distance to its k-th nearest neighbor exceeds
// threshold * bounding-box diagonal (the threshold is defined over clouds
// normalized to unit diagonal). The neighbor search excludes the point
// itself. Returns the number of points removed. Throws TooFewPoints when
// the cloud has k points or fewer.
size_t filter_outliers(ColoredPointCloud& cloud, int k = 16, double threshold = 0.01);

// Entry surfaces face the camera, exit surfaces face away, alternating by
// layer parity. CameraOnly orients everything toward the camera, for open
// meshes where the parity assumption breaks.
enum class NormalOrientation { LayerParity, CameraOnly };

// Per-point unit normals from a PCA plane fit over the k nearest neighbors
// (including the point). Clouds without layer tags fall back to camera-only
// orientation. Throws TooFewPoints unless the cloud has more than k points.
void estimate_normals(ColoredPointCloud& cloud, const Camera& camera, int k = 16,
                      NormalOrientation orientation = NormalOrientation::LayerParity);

// Binary little-endian PLY with x/y/z, optional nx/ny/nz, red/green/blue,
// and the layer tag, plus a header comment recording the bounding-box
// diagonal used as the outlier-filter scale.
void save_ply_cloud(const std::string& path, const ColoredPointCloud& cloud);
ColoredPointCloud load_ply_cloud(const std::string& path);

}  // namespace peelkit
