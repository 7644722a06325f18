#pragma once

#include <cstdint>
#include <vector>

#include "gf/common.hpp"

namespace gf {

/// Row-major image; channel index varies fastest.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int w, int h, bool fill = false)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int x, int y) const { return data[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t b : data) n += (b != 0);
    return n;
  }
  bool same_shape(const Mask& o) const { return width == o.width && height == o.height; }
};

/// One rendered/captured/restored frame. `transmittance` is the per-pixel
/// product of (1 - alpha) along the ray: 1 means the ray hit nothing.
struct FrameRGBD {
  Image rgb;            // HxWx3 in [0,1]
  Image depth;          // HxW, camera-space z, world units
  Image transmittance;  // HxW in [0,1]
  Mask valid;           // depth validity

  FrameRGBD() = default;
  FrameRGBD(int w, int h)
      : rgb(w, h, 3), depth(w, h, 1), transmittance(w, h, 1, 1.0), valid(w, h, false) {}

  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
};

}  // namespace gf
