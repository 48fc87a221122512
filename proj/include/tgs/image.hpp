#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgs/types.hpp"

namespace tgs {

// Row-major, channel-interleaved float image. Values live in [0, 1] for
// color data; arbitrary for scalar maps.
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c) {
    data.assign(static_cast<std::size_t>(w) * h * c, 0.0);
  }

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Per-pixel mean absolute color difference across channels.
Image error_map(const Image& rendered, const Image& observed);

// ------------------------------------------------------------- file io ----

// Raw float32 dump, for exact tests. Layout (little-endian):
//   magic "TGF1" | u32 width | u32 height | u32 channels |
//   f32 samples, row-major, channel-interleaved
void write_raw(const std::string& path, const Image& img);
Image read_raw(const std::string& path);

// PNG, non-interlaced. 8-bit for 1/3-channel color output, 16-bit grayscale
// for attribute-map rasters. Values are clamped to [0,1] and scaled on
// write; reads return values scaled back to [0,1].
void write_png8(const std::string& path, const Image& img);
void write_png16_gray(const std::string& path, const std::vector<uint16_t>& samples,
                      int width, int height);
Image read_png(const std::string& path);
std::vector<uint16_t> read_png16_gray(const std::string& path, int& width, int& height);

}  // namespace tgs
