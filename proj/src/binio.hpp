#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "peelkit/errors.hpp"
#include "peelkit/math.hpp"

// Little-endian byte packing shared by the container writers. Internal.
namespace peelkit::binio {

inline void put_u(std::string& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i32(std::string& out, int32_t v) {
  put_u(out, static_cast<uint32_t>(v), 4);
}

inline void put_f32(std::string& out, float f) {
  uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u(out, u, 4);
}

inline void put_f64(std::string& out, double d) {
  uint64_t u;
  std::memcpy(&u, &d, 8);
  put_u(out, u, 8);
}

inline void put_vec3_f64(std::string& out, const Vec3& v) {
  put_f64(out, v.x);
  put_f64(out, v.y);
  put_f64(out, v.z);
}

inline void put_vec3_f32(std::string& out, const Vec3& v) {
  put_f32(out, static_cast<float>(v.x));
  put_f32(out, static_cast<float>(v.y));
  put_f32(out, static_cast<float>(v.z));
}

struct ByteReader {
  const std::vector<char>& buf;
  const std::string& path;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw ParseError(path + ": truncated file");
  }
  size_t remaining() const { return buf.size() - pos; }
  uint64_t u(int bytes) {
    need(bytes);
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
    pos += bytes;
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(static_cast<uint32_t>(u(4))); }
  float f32() {
    uint32_t v = static_cast<uint32_t>(u(4));
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  double f64() {
    uint64_t v = u(8);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  Vec3 vec3_f64() {
    Vec3 v;
    v.x = f64();
    v.y = f64();
    v.z = f64();
    return v;
  }
  Vec3 vec3_f32() {
    Vec3 v;
    v.x = f32();
    v.y = f32();
    v.z = f32();
    return v;
  }
};

}  // namespace peelkit::binio
