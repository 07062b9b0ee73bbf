#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace peelkit {

// PNG helpers. Writers emit only IHDR/IDAT/IEND, so identical inputs give
// byte-identical files.

// Maps data from [lo, hi] to 16-bit grayscale, clamping; hi must exceed lo.
void save_png_gray16(const std::string& path, int width, int height, const float* data,
                     float lo, float hi);

// 0/1 mask written as 8-bit grayscale 0/255.
void save_png_mask(const std::string& path, int width, int height, const uint8_t* mask01);

// Interleaved float RGB in [0,1] written as 8-bit color.
void save_png_rgb8(const std::string& path, int width, int height, const float* rgb01);

// Reads any PNG and thresholds channel 0 at >127 into a 0/1 mask.
std::vector<uint8_t> load_png_mask(const std::string& path, int* width, int* height);

}  // namespace peelkit
