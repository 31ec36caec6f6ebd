#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfit {

/// Single-channel float raster, row-major, row 0 = top.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Raster() = default;
  Raster(int w, int h, double fill = 0.0) : width(w), height(h) {
    if (w < 1 || h < 1) throw std::invalid_argument("raster dimensions must be >= 1");
    data.assign(static_cast<size_t>(w) * h, fill);
  }

  double& at(int u, int v) { return data[static_cast<size_t>(v) * width + u]; }
  double at(int u, int v) const { return data[static_cast<size_t>(v) * width + u]; }
  size_t size() const { return data.size(); }

  bool same_shape(const Raster& o) const { return width == o.width && height == o.height; }
};

/// Boolean mask raster; nonzero = sky / invalid.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h, std::uint8_t fill = 0) : width(w), height(h) {
    if (w < 1 || h < 1) throw std::invalid_argument("mask dimensions must be >= 1");
    data.assign(static_cast<size_t>(w) * h, fill);
  }

  std::uint8_t& at(int u, int v) { return data[static_cast<size_t>(v) * width + u]; }
  std::uint8_t at(int u, int v) const { return data[static_cast<size_t>(v) * width + u]; }
  size_t size() const { return data.size(); }
};

inline void require_same_shape(const Raster& a, const Raster& b, const std::string& what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(what + ": shape mismatch (" + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) +
                                "x" + std::to_string(b.height) + ")");
}

}  // namespace dfit
