// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace spawnnet {

/// HWC float image, values in [0, 1]. c is 1 (gray/depth) or 3 (RGB).
struct Image {
  int h = 0, w = 0, c = 0;
  std::vector<float> data;

  Image() = default;
  Image(int height, int width, int channels)
      : h(height), w(width), c(channels),
        data(std::size_t(height) * width * channels, 0.f) {}

  float& at(int y, int x, int ch) {
    return data[(std::size_t(y) * w + x) * c + ch];
  }
  float at(int y, int x, int ch) const {
    return data[(std::size_t(y) * w + x) * c + ch];
  }

  std::size_t numel() const { return data.size(); }
};

/// 8-bit PNG (c == 1 or 3). Values clamped to [0, 1] on write.
void write_png(const std::string& path, const Image& img);

/// 16-bit grayscale PNG for depth maps (c must be 1).
void write_png16(const std::string& path, const Image& img);

/// Reads 8-bit gray/RGB/RGBA (alpha dropped) and 16-bit gray PNGs.
Image read_png(const std::string& path);

/// Bilinear sample with edge clamping; fractional pixel coordinates.
float bilinear_sample(const Image& img, float y, float x, int ch);

/// Resize to (out_h, out_w) with align-corners-false bilinear interpolation.
Image resize_bilinear(const Image& img, int out_h, int out_w);

}  // namespace spawnnet
