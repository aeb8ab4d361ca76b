// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "spawnnet/errors.hpp"
#include "spawnnet/nn.hpp"

namespace spawnnet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t to_u8(float v) {
  const float clamped = std::min(1.f, std::max(0.f, v));
  return std::uint8_t(std::lround(clamped * 255.f));
}

std::uint16_t to_u16(float v) {
  const float clamped = std::min(1.f, std::max(0.f, v));
  return std::uint16_t(std::lround(clamped * 65535.f));
}

void write_png_impl(const std::string& path, const Image& img, int bit_depth) {
  if (img.h <= 0 || img.w <= 0) throw InputError("write_png: empty image");
  if (bit_depth == 16 && img.c != 1)
    throw InputError("write_png16: expected a single-channel image");
  if (img.c != 1 && img.c != 3)
    throw InputError("write_png: channel count must be 1 or 3");

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw InputError("write_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_png: libpng error writing " + path);
  }
  png_init_io(png, fp.get());
  const int color = img.c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), bit_depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  if (bit_depth == 8) {
    std::vector<std::uint8_t> row(std::size_t(img.w) * img.c);
    for (int y = 0; y < img.h; ++y) {
      for (int x = 0; x < img.w; ++x)
        for (int ch = 0; ch < img.c; ++ch) row[std::size_t(x) * img.c + ch] = to_u8(img.at(y, x, ch));
      png_write_row(png, row.data());
    }
  } else {
    std::vector<std::uint8_t> row(std::size_t(img.w) * 2);
    for (int y = 0; y < img.h; ++y) {
      for (int x = 0; x < img.w; ++x) {
        const std::uint16_t v = to_u16(img.at(y, x, 0));
        row[std::size_t(x) * 2] = std::uint8_t(v >> 8);  // PNG is big-endian
        row[std::size_t(x) * 2 + 1] = std::uint8_t(v & 0xff);
      }
      png_write_row(png, row.data());
    }
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::string& path, const Image& img) { write_png_impl(path, img, 8); }
void write_png16(const std::string& path, const Image& img) { write_png_impl(path, img, 16); }

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw LookupError("read_png: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("read_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("read_png: libpng error reading " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int h = int(png_get_image_height(png, info));
  const int w = int(png_get_image_width(png, info));
  const int channels = int(png_get_channels(png, info));
  const int depth = png_get_bit_depth(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("read_png: unsupported channel count in " + path);
  }

  Image img(h, w, channels);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> row(row_bytes);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    if (depth == 8) {
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < channels; ++ch)
          img.at(y, x, ch) = float(row[std::size_t(x) * channels + ch]) / 255.f;
    } else {
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < channels; ++ch) {
          const std::size_t o = (std::size_t(x) * channels + ch) * 2;
          const std::uint16_t v = std::uint16_t((row[o] << 8) | row[o + 1]);
          img.at(y, x, ch) = float(v) / 65535.f;
        }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

float bilinear_sample(const Image& img, float y, float x, int ch) {
  float sy = std::min(float(img.h - 1), std::max(0.f, y));
  float sx = std::min(float(img.w - 1), std::max(0.f, x));
  const int y0 = int(sy), x0 = int(sx);
  const int y1 = std::min(y0 + 1, img.h - 1), x1 = std::min(x0 + 1, img.w - 1);
  const float ty = sy - float(y0), tx = sx - float(x0);
  const float top = img.at(y0, x0, ch) + (img.at(y0, x1, ch) - img.at(y0, x0, ch)) * tx;
  const float bot = img.at(y1, x0, ch) + (img.at(y1, x1, ch) - img.at(y1, x0, ch)) * tx;
  return top + (bot - top) * ty;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  Image out(out_h, out_w, img.c);
  const nn::BilinearAxis ay = nn::bilinear_axis(img.h, out_h);
  const nn::BilinearAxis ax = nn::bilinear_axis(img.w, out_w);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int ch = 0; ch < img.c; ++ch) {
        const float v00 = img.at(ay.i0[y], ax.i0[x], ch), v01 = img.at(ay.i0[y], ax.i1[x], ch);
        const float v10 = img.at(ay.i1[y], ax.i0[x], ch), v11 = img.at(ay.i1[y], ax.i1[x], ch);
        const float top = v00 + (v01 - v00) * ax.t[x];
        const float bot = v10 + (v11 - v10) * ax.t[x];
        out.at(y, x, ch) = top + (bot - top) * ay.t[y];
      }
    }
  }
  return out;
}

}  // namespace spawnnet
