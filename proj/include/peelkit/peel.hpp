#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "peelkit/bvh.hpp"
#include "peelkit/camera.hpp"
#include "peelkit/mesh.hpp"

namespace peelkit {

// Stack of L per-pixel maps recording successive ray-surface intersections.
// Depth holds the raw ray parameter t in world units with 0 meaning "no
// hit"; normalization happens only at serialization. Planes are row-major.
struct PeelStack {
  int width = 0, height = 0, layers = 0;
  bool has_rgb = false;
  Camera camera;
  std::vector<float> depth;  // [layer][y][x]
  std::vector<float> rgb;    // [layer][channel][y][x], channels r,g,b

  size_t plane() const { return static_cast<size_t>(width) * height; }
  void allocate();

  float& d(int layer, int y, int x) {
    return depth[(static_cast<size_t>(layer) * height + y) * width + x];
  }
  float d(int layer, int y, int x) const {
    return depth[(static_cast<size_t>(layer) * height + y) * width + x];
  }
  float& c(int layer, int channel, int y, int x) {
    return rgb[((static_cast<size_t>(layer) * 3 + channel) * height + y) * width + x];
  }
  float c(int layer, int channel, int y, int x) const {
    return rgb[((static_cast<size_t>(layer) * 3 + channel) * height + y) * width + x];
  }

  // Enforces: a filled layer implies all earlier layers filled with strictly
  // smaller depth, and rgb only where depth is. Throws Error naming the
  // first offending pixel.
  void check_invariants() const;
};

// Per-layer prior-support masks gamma and the shared foreground mask, all
// hard 0/1.
struct MaskStack {
  int width = 0, height = 0, layers = 0;
  std::vector<uint8_t> gamma;  // [layer][y][x]
  std::vector<uint8_t> fg;     // [y][x]

  size_t plane() const { return static_cast<size_t>(width) * height; }
  void allocate();
  uint8_t g(int layer, int y, int x) const {
    return gamma[(static_cast<size_t>(layer) * height + y) * width + x];
  }
  uint8_t f(int y, int x) const { return fg[static_cast<size_t>(y) * width + x]; }
};

// Signed per-pixel depth offsets, defined on gamma and zero elsewhere. The
// conflict plane marks pixels where the prior has a layer the target lacks;
// those carry delta 0 and are excluded from the residual loss.
struct ResidualStack {
  int width = 0, height = 0, layers = 0;
  std::vector<float> delta;       // [layer][y][x]
  std::vector<uint8_t> conflict;  // [layer][y][x]

  size_t plane() const { return static_cast<size_t>(width) * height; }
  void allocate();
};

// Absolute depths for pixels inside the foreground but outside gamma.
struct AuxiliaryStack {
  int width = 0, height = 0, layers = 0;
  std::vector<float> a;  // [layer][y][x]

  size_t plane() const { return static_cast<size_t>(width) * height; }
  void allocate();
};

// Casts one ray per pixel center and records the first `layers` merged hits
// as depth (+ barycentric vertex color when with_rgb; white for colorless
// meshes). overflow, when non-null, receives the number of pixels whose hit
// count exceeded `layers`. Deterministic for any thread count.
PeelStack render_peel(const TriangleMesh& mesh, const Bvh& bvh, const Camera& camera,
                      int layers, bool with_rgb = true, int64_t* overflow = nullptr);

// Depth-only variant used for the prior stacks.
inline PeelStack render_prior_peel(const TriangleMesh& mesh, const Bvh& bvh,
                                   const Camera& camera, int layers) {
  return render_peel(mesh, bvh, camera, layers, false);
}

// First-hit normals in camera space (x right, y up, z toward the camera),
// interleaved 3 floats per pixel, zero where the ray misses.
std::vector<float> render_normal_map(const TriangleMesh& mesh, const Bvh& bvh,
                                     const Camera& camera);

// Self-describing little-endian container for all stack kinds. content is
// one of "DPTH", "DRGB", "RD", "AUX", "GAM", "FG" (space-padded to 4 bytes
// on disk). Values are stored normalized by [t_near, t_far]; writers pick
// t_near = 0 and a power-of-two t_far so float32 scaling round-trips
// bit-exactly. A sidecar JSON manifest at path + ".json" duplicates the
// header.
struct PeelFile {
  std::string content;
  uint32_t width = 0, height = 0;
  uint8_t layers = 0, channels = 1;
  double t_near = 0.0, t_far = 1.0;
  Camera camera;
  std::vector<float> planes;  // [layer][channel][y][x]
};

void save_peel_file(const std::string& path, const PeelFile& file);
PeelFile load_peel_file(const std::string& path);

// Typed wrappers over the container.
void save_peel(const std::string& path, const PeelStack& stack);
PeelStack load_peel(const std::string& path);
// Residual files use channels = 2: the normalized delta plane plus the raw
// 0/1 conflict plane.
void save_residual(const std::string& path, const ResidualStack& rd, const Camera& camera);
ResidualStack load_residual(const std::string& path, Camera* camera = nullptr);
void save_auxiliary(const std::string& path, const AuxiliaryStack& aux, const Camera& camera);
AuxiliaryStack load_auxiliary(const std::string& path, Camera* camera = nullptr);
void save_masks(const std::string& gamma_path, const std::string& fg_path, const MaskStack& masks,
                const Camera& camera);
MaskStack load_masks(const std::string& gamma_path, const std::string& fg_path);

// Smallest power of two >= x (>= 1), the exact-scaling normalizer.
double pow2_at_least(double x);

}  // namespace peelkit
