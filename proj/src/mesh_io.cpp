#include "peelkit/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "peelkit/errors.hpp"

namespace peelkit {

namespace {

std::string lower_ext(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

[[noreturn]] void parse_fail(const std::string& path, size_t line, const std::string& what) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

int resolve_index(long idx, size_t count, const std::string& path, size_t line) {
  long r = idx > 0 ? idx - 1 : static_cast<long>(count) + idx;
  if (idx == 0 || r < 0 || r >= static_cast<long>(count))
    parse_fail(path, line, "index " + std::to_string(idx) + " out of range");
  return static_cast<int>(r);
}

}  // namespace

TriangleMesh load_obj(const std::string& path, size_t* dropped_degenerate) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<Vec3> positions, colors, normals;
  bool all_colored = true;
  struct Corner {
    int v = 0;
    int n = -1;
  };
  std::vector<std::array<Corner, 3>> tris;
  size_t corners = 0, normal_corners = 0;
  bool normals_match = true;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;

    if (tag == "v") {
      std::vector<double> vals;
      double d;
      while (ls >> d) vals.push_back(d);
      if (vals.size() < 3) parse_fail(path, lineno, "vertex needs 3 coordinates");
      positions.push_back({vals[0], vals[1], vals[2]});
      if (vals.size() >= 6)
        colors.push_back({vals[3], vals[4], vals[5]});
      else
        all_colored = false;
    } else if (tag == "vn") {
      Vec3 n;
      if (!(ls >> n.x >> n.y >> n.z)) parse_fail(path, lineno, "normal needs 3 coordinates");
      normals.push_back(n);
    } else if (tag == "f") {
      std::vector<Corner> face;
      std::string tok;
      while (ls >> tok) {
        Corner c;
        long vi = 0, ni = 0;
        bool has_ni = false;
        // forms: v, v/t, v//n, v/t/n
        char* end = nullptr;
        vi = std::strtol(tok.c_str(), &end, 10);
        if (end == tok.c_str()) parse_fail(path, lineno, "bad face token '" + tok + "'");
        if (*end == '/') {
          const char* p = end + 1;
          if (*p != '/') {
            std::strtol(p, &end, 10);  // texture index, unused
            p = end;
          }
          if (*p == '/') {
            ni = std::strtol(p + 1, &end, 10);
            has_ni = end != p + 1;
          }
        }
        c.v = resolve_index(vi, positions.size(), path, lineno);
        ++corners;
        if (has_ni) {
          c.n = resolve_index(ni, normals.size(), path, lineno);
          ++normal_corners;
          if (c.n != c.v) normals_match = false;
        }
        face.push_back(c);
      }
      if (face.size() < 3) continue;
      for (size_t i = 1; i + 1 < face.size(); ++i)
        tris.push_back({face[0], face[i], face[i + 1]});
    }
    // vt, g, o, s, mtllib, usemtl and anything else: skipped
  }

  TriangleMesh mesh;
  mesh.vertices = std::move(positions);
  if (all_colored && colors.size() == mesh.vertices.size()) mesh.colors = std::move(colors);
  mesh.triangles.reserve(tris.size());
  for (const auto& t : tris)
    mesh.triangles.push_back({static_cast<uint32_t>(t[0].v), static_cast<uint32_t>(t[1].v),
                              static_cast<uint32_t>(t[2].v)});
  if (corners > 0 && normal_corners == corners && normals_match &&
      normals.size() == mesh.vertices.size())
    mesh.normals = std::move(normals);
  else if (normal_corners > 0)
    mesh.compute_vertex_normals();
  const size_t dropped = mesh.drop_degenerate_triangles();
  if (dropped_degenerate) *dropped_degenerate = dropped;
  return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  char buf[256];
  const bool colored = mesh.has_colors();
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    if (colored) {
      const Vec3& c = mesh.colors[i];
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", v.x, v.y, v.z,
                    c.x, c.y, c.z);
    } else {
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    }
    out << buf;
  }
  const bool with_normals = mesh.has_normals();
  for (size_t i = 0; with_normals && i < mesh.normals.size(); ++i) {
    const Vec3& n = mesh.normals[i];
    std::snprintf(buf, sizeof buf, "vn %.17g %.17g %.17g\n", n.x, n.y, n.z);
    out << buf;
  }
  for (const auto& t : mesh.triangles) {
    if (with_normals)
      std::snprintf(buf, sizeof buf, "f %u//%u %u//%u %u//%u\n", t[0] + 1, t[0] + 1, t[1] + 1,
                    t[1] + 1, t[2] + 1, t[2] + 1);
    else
      std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path);
}

namespace {

enum PType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

struct Prop {
  std::string name;
  PType type = kU8;
  bool is_list = false;
  PType count_type = kU8;
};

struct Element {
  std::string name;
  size_t count = 0;
  std::vector<Prop> props;
};

size_t type_size(PType t) {
  switch (t) {
    case kI8:
    case kU8: return 1;
    case kI16:
    case kU16: return 2;
    case kI32:
    case kU32:
    case kF32: return 4;
    case kF64: return 8;
  }
  return 0;
}

PType parse_type(const std::string& s, const std::string& path, size_t line) {
  if (s == "char" || s == "int8") return kI8;
  if (s == "uchar" || s == "uint8") return kU8;
  if (s == "short" || s == "int16") return kI16;
  if (s == "ushort" || s == "uint16") return kU16;
  if (s == "int" || s == "int32") return kI32;
  if (s == "uint" || s == "uint32") return kU32;
  if (s == "float" || s == "float32") return kF32;
  if (s == "double" || s == "float64") return kF64;
  parse_fail(path, line, "unknown property type '" + s + "'");
}

class Cursor {
 public:
  Cursor(const std::vector<char>& data, size_t pos, const std::string& path)
      : data_(data), pos_(pos), path_(path) {}

  double read(PType t) {
    need(type_size(t));
    const char* p = data_.data() + pos_;
    pos_ += type_size(t);
    switch (t) {
      case kI8: { int8_t v; std::memcpy(&v, p, 1); return v; }
      case kU8: { uint8_t v; std::memcpy(&v, p, 1); return v; }
      case kI16: { int16_t v; std::memcpy(&v, p, 2); return v; }
      case kU16: { uint16_t v; std::memcpy(&v, p, 2); return v; }
      case kI32: { int32_t v; std::memcpy(&v, p, 4); return v; }
      case kU32: { uint32_t v; std::memcpy(&v, p, 4); return v; }
      case kF32: { float v; std::memcpy(&v, p, 4); return v; }
      case kF64: { double v; std::memcpy(&v, p, 8); return v; }
    }
    return 0;
  }

  void skip(size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  void need(size_t n) {
    if (pos_ + n > data_.size()) throw ParseError(path_ + ": truncated PLY body");
  }
  const std::vector<char>& data_;
  size_t pos_;
  const std::string& path_;
};

}  // namespace

PlyData load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  // Header is ASCII lines up to "end_header".
  size_t pos = 0, lineno = 0;
  auto next_line = [&]() -> std::string {
    size_t eol = pos;
    while (eol < data.size() && data[eol] != '\n') ++eol;
    if (eol >= data.size()) parse_fail(path, lineno, "header without end_header");
    std::string line(data.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = eol + 1;
    ++lineno;
    return line;
  };

  if (next_line() != "ply") parse_fail(path, lineno, "missing 'ply' magic");
  std::vector<Element> elements;
  bool format_ok = false;
  for (;;) {
    std::string line = next_line();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "end_header") break;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian")
        parse_fail(path, lineno, "only binary little-endian PLY is supported, got '" + fmt + "'");
      format_ok = true;
    } else if (tag == "element") {
      Element e;
      if (!(ls >> e.name >> e.count)) parse_fail(path, lineno, "bad element line");
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) parse_fail(path, lineno, "property before element");
      std::string t1;
      ls >> t1;
      Prop p;
      if (t1 == "list") {
        std::string ct, it;
        if (!(ls >> ct >> it >> p.name)) parse_fail(path, lineno, "bad list property");
        p.is_list = true;
        p.count_type = parse_type(ct, path, lineno);
        p.type = parse_type(it, path, lineno);
      } else {
        if (!(ls >> p.name)) parse_fail(path, lineno, "bad property line");
        p.type = parse_type(t1, path, lineno);
      }
      elements.back().props.push_back(p);
    } else {
      parse_fail(path, lineno, "unknown header line '" + tag + "'");
    }
  }
  if (!format_ok) parse_fail(path, lineno, "missing format line");

  PlyData out;
  Cursor cur(data, pos, path);
  for (const Element& e : elements) {
    const bool is_vertex = e.name == "vertex";
    const bool is_face = e.name == "face";
    if (is_vertex) {
      // Positions are required as float32; optional attributes have fixed
      // expected types so a wrong type fails loudly instead of misreading.
      for (const Prop& p : e.props) {
        if (p.is_list) continue;
        if ((p.name == "x" || p.name == "y" || p.name == "z" || p.name == "nx" ||
             p.name == "ny" || p.name == "nz") &&
            p.type != kF32)
          throw ParseError(path + ": vertex property '" + p.name + "' must be float32");
        if ((p.name == "red" || p.name == "green" || p.name == "blue" || p.name == "layer") &&
            p.type != kU8)
          throw ParseError(path + ": vertex property '" + p.name + "' must be uchar");
      }
      bool has_xyz[3] = {};
      bool has_color = false, has_normal = false, has_layer = false;
      for (const Prop& p : e.props) {
        if (p.name == "x") has_xyz[0] = true;
        if (p.name == "y") has_xyz[1] = true;
        if (p.name == "z") has_xyz[2] = true;
        if (p.name == "red") has_color = true;
        if (p.name == "nx") has_normal = true;
        if (p.name == "layer") has_layer = true;
      }
      if (!(has_xyz[0] && has_xyz[1] && has_xyz[2]))
        throw ParseError(path + ": vertex element lacks float32 x/y/z");
      out.positions.reserve(e.count);
      for (size_t i = 0; i < e.count; ++i) {
        Vec3 pt, col, nrm;
        uint8_t layer = 0;
        for (const Prop& p : e.props) {
          if (p.is_list) {
            size_t n = static_cast<size_t>(cur.read(p.count_type));
            cur.skip(n * type_size(p.type));
            continue;
          }
          double v = cur.read(p.type);
          if (p.name == "x") pt.x = v;
          else if (p.name == "y") pt.y = v;
          else if (p.name == "z") pt.z = v;
          else if (p.name == "red") col.x = v / 255.0;
          else if (p.name == "green") col.y = v / 255.0;
          else if (p.name == "blue") col.z = v / 255.0;
          else if (p.name == "nx") nrm.x = v;
          else if (p.name == "ny") nrm.y = v;
          else if (p.name == "nz") nrm.z = v;
          else if (p.name == "layer") layer = static_cast<uint8_t>(v);
        }
        out.positions.push_back(pt);
        if (has_color) out.colors.push_back(col);
        if (has_normal) out.normals.push_back(nrm);
        if (has_layer) out.layers.push_back(layer);
      }
    } else if (is_face) {
      for (size_t i = 0; i < e.count; ++i) {
        for (const Prop& p : e.props) {
          if (!p.is_list) {
            cur.read(p.type);
            continue;
          }
          size_t n = static_cast<size_t>(cur.read(p.count_type));
          if (p.name != "vertex_indices" && p.name != "vertex_index") {
            cur.skip(n * type_size(p.type));
            continue;
          }
          std::vector<uint32_t> idx(n);
          for (size_t j = 0; j < n; ++j) {
            double v = cur.read(p.type);
            if (v < 0 || v >= static_cast<double>(out.positions.size()))
              throw ParseError(path + ": face index out of range");
            idx[j] = static_cast<uint32_t>(v);
          }
          for (size_t j = 1; j + 1 < n; ++j)
            out.triangles.push_back({idx[0], idx[j], idx[j + 1]});
        }
      }
    } else {
      for (size_t i = 0; i < e.count; ++i) {
        for (const Prop& p : e.props) {
          if (p.is_list) {
            size_t n = static_cast<size_t>(cur.read(p.count_type));
            cur.skip(n * type_size(p.type));
          } else {
            cur.skip(type_size(p.type));
          }
        }
      }
    }
  }
  return out;
}

TriangleMesh load_ply_mesh(const std::string& path, size_t* dropped_degenerate) {
  PlyData ply = load_ply(path);
  TriangleMesh mesh;
  mesh.vertices = std::move(ply.positions);
  mesh.colors = std::move(ply.colors);
  mesh.normals = std::move(ply.normals);
  mesh.triangles = std::move(ply.triangles);
  const size_t dropped = mesh.drop_degenerate_triangles();
  if (dropped_degenerate) *dropped_degenerate = dropped;
  return mesh;
}

TriangleMesh load_mesh(const std::string& path, size_t* dropped_degenerate) {
  const std::string ext = lower_ext(path);
  if (ext == ".obj") return load_obj(path, dropped_degenerate);
  if (ext == ".ply") return load_ply_mesh(path, dropped_degenerate);
  throw Error("unsupported mesh format '" + ext + "' (expected .obj or .ply): " + path);
}

}  // namespace peelkit
