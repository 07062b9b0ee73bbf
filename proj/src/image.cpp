#include "peelkit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "peelkit/errors.hpp"

namespace peelkit {

namespace {

struct PngWriter {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngWriter(const std::string& path) {
    fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot write " + path);
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      close();
      throw IoError("libpng init failed for " + path);
    }
  }
  ~PngWriter() { close(); }
  void close() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    png = nullptr;
    info = nullptr;
    if (fp) std::fclose(fp);
    fp = nullptr;
  }
};

void write_rows(const std::string& path, int width, int height, int bit_depth, int color_type,
                const std::vector<uint8_t>& rows, size_t stride) {
  PngWriter w(path);
  // longjmp lands here on any libpng error; w's destructor still runs because
  // the throw unwinds normally from this frame.
  if (setjmp(png_jmpbuf(w.png))) throw IoError("libpng write failed for " + path);
  png_init_io(w.png, w.fp);
  png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(w.png, w.info);
  for (int y = 0; y < height; ++y)
    png_write_row(w.png, const_cast<png_bytep>(rows.data() + static_cast<size_t>(y) * stride));
  png_write_end(w.png, nullptr);
}

}  // namespace

void save_png_gray16(const std::string& path, int width, int height, const float* data,
                     float lo, float hi) {
  if (!(hi > lo)) throw InvertedRange("gray16 range needs hi > lo");
  const size_t stride = static_cast<size_t>(width) * 2;
  std::vector<uint8_t> rows(stride * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      float v = (data[static_cast<size_t>(y) * width + x] - lo) / (hi - lo);
      v = std::clamp(v, 0.0f, 1.0f);
      auto u = static_cast<uint16_t>(std::lround(v * 65535.0f));
      rows[y * stride + 2 * x] = static_cast<uint8_t>(u >> 8);  // png wants big-endian
      rows[y * stride + 2 * x + 1] = static_cast<uint8_t>(u & 0xff);
    }
  }
  write_rows(path, width, height, 16, PNG_COLOR_TYPE_GRAY, rows, stride);
}

void save_png_mask(const std::string& path, int width, int height, const uint8_t* mask01) {
  const size_t stride = static_cast<size_t>(width);
  std::vector<uint8_t> rows(stride * height);
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = mask01[i] ? 255 : 0;
  write_rows(path, width, height, 8, PNG_COLOR_TYPE_GRAY, rows, stride);
}

void save_png_rgb8(const std::string& path, int width, int height, const float* rgb01) {
  const size_t stride = static_cast<size_t>(width) * 3;
  std::vector<uint8_t> rows(stride * height);
  for (size_t i = 0; i < rows.size(); ++i) {
    float v = std::clamp(rgb01[i], 0.0f, 1.0f);
    rows[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
  }
  write_rows(path, width, height, 8, PNG_COLOR_TYPE_RGB, rows, stride);
}

namespace {

struct PngReader {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngReader(const std::string& path) {
    fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open " + path);
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) {
      close();
      throw IoError("libpng init failed for " + path);
    }
  }
  ~PngReader() { close(); }
  void close() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    png = nullptr;
    info = nullptr;
    if (fp) std::fclose(fp);
    fp = nullptr;
  }
};

}  // namespace

std::vector<uint8_t> load_png_mask(const std::string& path, int* width, int* height) {
  PngReader r(path);
  std::vector<uint8_t> row, mask;
  if (setjmp(png_jmpbuf(r.png))) throw IoError("libpng read failed for " + path);
  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);
  png_set_expand(r.png);
  png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  const int w = static_cast<int>(png_get_image_width(r.png, r.info));
  const int h = static_cast<int>(png_get_image_height(r.png, r.info));
  const int channels = png_get_channels(r.png, r.info);
  row.resize(png_get_rowbytes(r.png, r.info));
  mask.resize(static_cast<size_t>(w) * h);
  // Re-arm after the resizes so no allocation happens past this setjmp.
  if (setjmp(png_jmpbuf(r.png))) throw IoError("libpng read failed for " + path);
  for (int y = 0; y < h; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      mask[static_cast<size_t>(y) * w + x] = row[static_cast<size_t>(x) * channels] > 127 ? 1 : 0;
  }
  png_read_end(r.png, nullptr);
  *width = w;
  *height = h;
  return mask;
}

}  // namespace peelkit
