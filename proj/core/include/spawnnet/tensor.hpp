// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "spawnnet/errors.hpp"

namespace spawnnet {

/// Dense row-major tensor. Rank is dynamic; the NN stack uses [N,C,H,W] for
/// feature maps and [N,D] for flat activations.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d < 0) throw DimensionError("negative tensor dimension");
      n *= std::size_t(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[std::size_t(i)]; }
  int rank() const { return int(shape.size()); }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  // [N,C,H,W] accessors for the hot paths.
  T& at4(int n, int c, int y, int x) {
    return data[((std::size_t(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }
  const T& at4(int n, int c, int y, int x) const {
    return data[((std::size_t(n) * shape[1] + c) * shape[2] + y) * shape[3] + x];
  }
  T& at2(int i, int j) { return data[std::size_t(i) * shape[1] + j]; }
  const T& at2(int i, int j) const { return data[std::size_t(i) * shape[1] + j]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  Tensor reshaped(std::vector<int> s) const {
    if (numel_of(s) != numel())
      throw DimensionError("reshape changes element count");
    Tensor out;
    out.shape = std::move(s);
    out.data = data;
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (const T& v : data)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }
};

template <typename T>
void check_shape4(const Tensor<T>& t, const char* what) {
  if (t.rank() != 4) throw DimensionError(std::string(what) + ": expected rank-4 tensor, got " + t.shape_str());
}

}  // namespace spawnnet
