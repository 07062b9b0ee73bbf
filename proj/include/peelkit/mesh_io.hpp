#pragma once

#include <string>

#include "peelkit/mesh.hpp"

namespace peelkit {

// OBJ subset: `v x y z [r g b]`, `vn`, `f` with 1-based or negative indices
// and fan triangulation of polygons. Colors are adopted only when every
// vertex line carries them. Parsed normals are adopted only when every face
// corner's normal index equals its vertex index and the counts match;
// otherwise normals are recomputed area-weighted. Other directives are
// skipped. Throws IoError / ParseError.
// dropped_degenerate, when non-null, receives the sliver count removed at
// load.
TriangleMesh load_obj(const std::string& path, size_t* dropped_degenerate = nullptr);
void save_obj(const TriangleMesh& mesh, const std::string& path);

// Binary little-endian PLY. Vertex properties pulled out by name: x/y/z must
// be float32; red/green/blue uchar; nx/ny/nz float32; layer uchar. Unknown
// properties are skipped by their declared size. Faces (when present) are
// fan-triangulated.
struct PlyData {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;   // empty when the file has none
  std::vector<Vec3> normals;  // empty when the file has none
  std::vector<uint8_t> layers;
  std::vector<std::array<uint32_t, 3>> triangles;
};
PlyData load_ply(const std::string& path);

TriangleMesh load_ply_mesh(const std::string& path, size_t* dropped_degenerate = nullptr);

// Dispatch by extension (.obj / .ply, case-insensitive).
TriangleMesh load_mesh(const std::string& path, size_t* dropped_degenerate = nullptr);

}  // namespace peelkit
