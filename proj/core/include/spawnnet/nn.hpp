// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal trainable-layer stack: Conv2d / Linear / ReLU / MaxPool2d /
// bilinear resize / channel concat / pre-activation residual blocks, with
// hand-written backward passes and an Adam optimizer. Layouts are NCHW;
// convolutions run as im2col + GEMM. All GEMMs are issued per sample (or as
// one batched call) so results are bitwise deterministic regardless of the
// OpenMP thread count.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spawnnet/rng.hpp"
#include "spawnnet/tensor.hpp"

namespace spawnnet::nn {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using EMap = Eigen::Map<EMat<T>>;
template <typename T>
using ECMap = Eigen::Map<const EMat<T>>;

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> shape)
      : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.fill(T(0)); }
  std::size_t numel() const { return value.numel(); }
};

template <typename T>
class Module {
 public:
  virtual ~Module() = default;
  virtual void collect(std::vector<Parameter<T>*>& out) = 0;
};

template <typename T>
inline void he_normal_init(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / double(fan_in));
  for (auto& v : w.data) v = T(rng.normal(0.0, stddev));
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
class Conv2d : public Module<T> {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), k_(ksize), stride_(stride), pad_(pad),
        w_(name + ".weight", {out_ch, in_ch, ksize, ksize}),
        b_(name + ".bias", {out_ch}) {}

  void init(Rng& rng) {
    he_normal_init(w_.value, std::size_t(in_ch_) * k_ * k_, rng);
    b_.value.fill(T(0));
  }

  int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  Tensor<T> forward(const Tensor<T>& x) {
    check_shape4(x, "Conv2d");
    if (x.dim(1) != in_ch_)
      throw DimensionError("Conv2d " + w_.name + ": got " + std::to_string(x.dim(1)) +
                           " input channels, expected " + std::to_string(in_ch_));
    x_ = x;
    const int n = x.dim(0), ih = x.dim(2), iw = x.dim(3);
    const int oh = out_dim(ih), ow = out_dim(iw);
    if (oh < 1 || ow < 1)
      throw DimensionError("Conv2d " + w_.name + ": input " + x.shape_str() + " too small");
    Tensor<T> y({n, out_ch_, oh, ow});
    const int K = in_ch_ * k_ * k_, M = oh * ow;
    ECMap<T> wm(w_.value.ptr(), K, out_ch_);  // row-major [out,K] viewed col-major
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      std::vector<T> col(std::size_t(K) * M);
      im2col(x, s, col.data());
      ECMap<T> pm(col.data(), K, M);
      EMap<T> ym(y.ptr() + std::size_t(s) * out_ch_ * M, M, out_ch_);
      ym.noalias() = pm.transpose() * wm;
      for (int o = 0; o < out_ch_; ++o) ym.col(o).array() += b_.value.data[o];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = x_.dim(0), ih = x_.dim(2), iw = x_.dim(3);
    const int oh = gy.dim(2), ow = gy.dim(3);
    const int K = in_ch_ * k_ * k_, M = oh * ow;
    Tensor<T> gx({n, in_ch_, ih, iw});
    ECMap<T> wm(w_.value.ptr(), K, out_ch_);
    // Per-sample weight-gradient panels, reduced in sample order afterwards.
    std::vector<std::vector<T>> dw_panels(static_cast<std::size_t>(n));
    std::vector<std::vector<T>> db_panels(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      std::vector<T> col(std::size_t(K) * M);
      im2col(x_, s, col.data());
      ECMap<T> pm(col.data(), K, M);
      ECMap<T> gm(gy.ptr() + std::size_t(s) * out_ch_ * M, M, out_ch_);
      dw_panels[s].resize(std::size_t(K) * out_ch_);
      EMap<T> dwm(dw_panels[s].data(), K, out_ch_);
      dwm.noalias() = pm * gm;
      db_panels[s].resize(std::size_t(out_ch_));
      EMap<T> dbm(db_panels[s].data(), 1, out_ch_);
      dbm.noalias() = gm.colwise().sum();
      std::vector<T> dcol(std::size_t(K) * M);
      EMap<T> dpm(dcol.data(), K, M);
      dpm.noalias() = wm * gm.transpose();
      col2im(dcol.data(), gx, s);
    }
    for (int s = 0; s < n; ++s) {
      for (std::size_t i = 0; i < w_.grad.numel(); ++i) w_.grad.data[i] += dw_panels[s][i];
      for (int o = 0; o < out_ch_; ++o) b_.grad.data[o] += db_panels[s][o];
    }
    return gx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    out.push_back(&w_);
    out.push_back(&b_);
  }

  Parameter<T>& weight() { return w_; }
  Parameter<T>& bias() { return b_; }
  int out_channels() const { return out_ch_; }

 private:
  // col is column-major K x M: the K-vector of one output position is
  // contiguous. Row-major flat weight [out][in][ky][kx] viewed as a
  // column-major K x out matrix shares the same memory, so y^T = p^T * w.
  void im2col(const Tensor<T>& x, int s, T* col) const {
    const int ih = x.dim(2), iw = x.dim(3);
    const int oh = out_dim(ih), ow = out_dim(iw);
    const T* xs = x.ptr() + std::size_t(s) * in_ch_ * ih * iw;
    std::size_t m = 0;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++m) {
        T* dst = col + m * std::size_t(in_ch_) * k_ * k_;
        const int y0 = oy * stride_ - pad_, x0 = ox * stride_ - pad_;
        for (int c = 0; c < in_ch_; ++c) {
          const T* plane = xs + std::size_t(c) * ih * iw;
          for (int ky = 0; ky < k_; ++ky) {
            const int yy = y0 + ky;
            for (int kx = 0; kx < k_; ++kx) {
              const int xx = x0 + kx;
              *dst++ = (yy >= 0 && yy < ih && xx >= 0 && xx < iw)
                           ? plane[std::size_t(yy) * iw + xx]
                           : T(0);
            }
          }
        }
      }
    }
  }

  void col2im(const T* col, Tensor<T>& gx, int s) const {
    const int ih = gx.dim(2), iw = gx.dim(3);
    const int oh = out_dim(ih), ow = out_dim(iw);
    T* xs = gx.ptr() + std::size_t(s) * in_ch_ * ih * iw;
    std::size_t m = 0;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++m) {
        const T* src = col + m * std::size_t(in_ch_) * k_ * k_;
        const int y0 = oy * stride_ - pad_, x0 = ox * stride_ - pad_;
        for (int c = 0; c < in_ch_; ++c) {
          T* plane = xs + std::size_t(c) * ih * iw;
          for (int ky = 0; ky < k_; ++ky) {
            const int yy = y0 + ky;
            for (int kx = 0; kx < k_; ++kx, ++src) {
              const int xx = x0 + kx;
              if (yy >= 0 && yy < ih && xx >= 0 && xx < iw)
                plane[std::size_t(yy) * iw + xx] += *src;
            }
          }
        }
      }
    }
  }

  int in_ch_, out_ch_, k_, stride_, pad_;
  Parameter<T> w_, b_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// Linear

template <typename T>
class Linear : public Module<T> {
 public:
  Linear(std::string name, int in_dim, int out_dim)
      : in_(in_dim), out_(out_dim),
        w_(name + ".weight", {out_dim, in_dim}),
        b_(name + ".bias", {out_dim}) {}

  void init(Rng& rng) {
    he_normal_init(w_.value, std::size_t(in_), rng);
    b_.value.fill(T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) {
    if (x.rank() != 2 || x.dim(1) != in_)
      throw DimensionError("Linear " + w_.name + ": bad input " + x.shape_str());
    x_ = x;
    const int n = x.dim(0);
    Tensor<T> y({n, out_});
    ECMap<T> xm(x.ptr(), in_, n);            // row-major [n,in] == col-major in x n
    ECMap<T> wm(w_.value.ptr(), in_, out_);  // row-major [out,in] == col-major in x out
    EMap<T> ym(y.ptr(), out_, n);
    ym.noalias() = wm.transpose() * xm;
    for (int s = 0; s < n; ++s)
      for (int o = 0; o < out_; ++o) y.data[std::size_t(s) * out_ + o] += b_.value.data[o];
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const int n = x_.dim(0);
    Tensor<T> gx({n, in_});
    ECMap<T> xm(x_.ptr(), in_, n);
    ECMap<T> gm(gy.ptr(), out_, n);
    ECMap<T> wm(w_.value.ptr(), in_, out_);
    EMap<T> gwm(w_.grad.ptr(), in_, out_);
    gwm.noalias() += xm * gm.transpose();
    EMap<T> gxm(gx.ptr(), in_, n);
    gxm.noalias() = wm * gm;
    for (int s = 0; s < n; ++s)
      for (int o = 0; o < out_; ++o) b_.grad.data[o] += gy.data[std::size_t(s) * out_ + o];
    return gx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    out.push_back(&w_);
    out.push_back(&b_);
  }

  Parameter<T>& weight() { return w_; }
  Parameter<T>& bias() { return b_; }
  int out_dim() const { return out_; }

 private:
  int in_, out_;
  Parameter<T> w_, b_;
  Tensor<T> x_;
};

// ---------------------------------------------------------------------------
// ReLU

template <typename T>
class ReLU {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    mask_.assign(x.numel(), 0);
    Tensor<T> y = x;
    for (std::size_t i = 0; i < y.numel(); ++i) {
      if (y.data[i] > T(0))
        mask_[i] = 1;
      else
        y.data[i] = T(0);
    }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx = gy;
    for (std::size_t i = 0; i < gx.numel(); ++i)
      if (!mask_[i]) gx.data[i] = T(0);
    return gx;
  }

 private:
  std::vector<std::uint8_t> mask_;
};

// ---------------------------------------------------------------------------
// MaxPool2d

template <typename T>
class MaxPool2d {
 public:
  MaxPool2d(int ksize, int stride, int pad) : k_(ksize), stride_(stride), pad_(pad) {}

  int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  Tensor<T> forward(const Tensor<T>& x) {
    check_shape4(x, "MaxPool2d");
    in_shape_ = x.shape;
    const int n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
    const int oh = out_dim(ih), ow = out_dim(iw);
    Tensor<T> y({n, c, oh, ow});
    argmax_.assign(y.numel(), 0);
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        const T* plane = x.ptr() + (std::size_t(s) * c + ch) * ih * iw;
        const std::size_t base = (std::size_t(s) * c + ch) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            T best{};
            std::int64_t best_idx = -1;
            for (int ky = 0; ky < k_; ++ky) {
              const int yy = oy * stride_ - pad_ + ky;
              if (yy < 0 || yy >= ih) continue;
              for (int kx = 0; kx < k_; ++kx) {
                const int xx = ox * stride_ - pad_ + kx;
                if (xx < 0 || xx >= iw) continue;
                const T v = plane[std::size_t(yy) * iw + xx];
                if (best_idx < 0 || v > best) {
                  best = v;
                  best_idx = std::int64_t(yy) * iw + xx;
                }
              }
            }
            y.data[base + std::size_t(oy) * ow + ox] = best;
            argmax_[base + std::size_t(oy) * ow + ox] = best_idx;
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape_);
    const int c = in_shape_[1], ih = in_shape_[2], iw = in_shape_[3];
    const int oh = gy.dim(2), ow = gy.dim(3);
    for (int s = 0; s < in_shape_[0]; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        T* plane = gx.ptr() + (std::size_t(s) * c + ch) * ih * iw;
        const std::size_t base = (std::size_t(s) * c + ch) * oh * ow;
        for (std::size_t i = 0; i < std::size_t(oh) * ow; ++i)
          plane[argmax_[base + i]] += gy.data[base + i];
      }
    }
    return gx;
  }

 private:
  int k_, stride_, pad_;
  std::vector<int> in_shape_;
  std::vector<std::int64_t> argmax_;
};

// ---------------------------------------------------------------------------
// Bilinear resize (align-corners = false; source coordinates clamped to the
// valid range, matching the convention pinned by the adapter contract).

struct BilinearAxis {
  std::vector<int> i0, i1;
  std::vector<float> t;
};

inline BilinearAxis bilinear_axis(int in, int out) {
  BilinearAxis ax;
  ax.i0.resize(out);
  ax.i1.resize(out);
  ax.t.resize(out);
  const double scale = double(in) / double(out);
  for (int i = 0; i < out; ++i) {
    double src = (double(i) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    if (src > double(in - 1)) src = double(in - 1);
    const int lo = int(src);
    ax.i0[i] = lo;
    ax.i1[i] = std::min(lo + 1, in - 1);
    ax.t[i] = float(src - double(lo));
  }
  return ax;
}

template <typename T>
class BilinearResize {
 public:
  BilinearResize(int out_h, int out_w) : oh_(out_h), ow_(out_w) {}

  Tensor<T> forward(const Tensor<T>& x) {
    check_shape4(x, "BilinearResize");
    in_shape_ = x.shape;
    const int n = x.dim(0), c = x.dim(1), ih = x.dim(2), iw = x.dim(3);
    ay_ = bilinear_axis(ih, oh_);
    ax_ = bilinear_axis(iw, ow_);
    Tensor<T> y({n, c, oh_, ow_});
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        const T* src = x.ptr() + (std::size_t(s) * c + ch) * ih * iw;
        T* dst = y.ptr() + (std::size_t(s) * c + ch) * oh_ * ow_;
        for (int oy = 0; oy < oh_; ++oy) {
          const int y0 = ay_.i0[oy], y1 = ay_.i1[oy];
          const T ty = T(ay_.t[oy]);
          for (int ox = 0; ox < ow_; ++ox) {
            const int x0 = ax_.i0[ox], x1 = ax_.i1[ox];
            const T tx = T(ax_.t[ox]);
            const T v00 = src[std::size_t(y0) * iw + x0], v01 = src[std::size_t(y0) * iw + x1];
            const T v10 = src[std::size_t(y1) * iw + x0], v11 = src[std::size_t(y1) * iw + x1];
            const T top = v00 + (v01 - v00) * tx;
            const T bot = v10 + (v11 - v10) * tx;
            dst[std::size_t(oy) * ow_ + ox] = top + (bot - top) * ty;
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(in_shape_);
    const int c = in_shape_[1], ih = in_shape_[2], iw = in_shape_[3];
#pragma omp parallel for schedule(static)
    for (int s = 0; s < in_shape_[0]; ++s) {
      for (int ch = 0; ch < c; ++ch) {
        T* dst = gx.ptr() + (std::size_t(s) * c + ch) * ih * iw;
        const T* src = gy.ptr() + (std::size_t(s) * c + ch) * oh_ * ow_;
        for (int oy = 0; oy < oh_; ++oy) {
          const int y0 = ay_.i0[oy], y1 = ay_.i1[oy];
          const T ty = T(ay_.t[oy]);
          for (int ox = 0; ox < ow_; ++ox) {
            const int x0 = ax_.i0[ox], x1 = ax_.i1[ox];
            const T tx = T(ax_.t[ox]);
            const T g = src[std::size_t(oy) * ow_ + ox];
            dst[std::size_t(y0) * iw + x0] += g * (T(1) - ty) * (T(1) - tx);
            dst[std::size_t(y0) * iw + x1] += g * (T(1) - ty) * tx;
            dst[std::size_t(y1) * iw + x0] += g * ty * (T(1) - tx);
            dst[std::size_t(y1) * iw + x1] += g * ty * tx;
          }
        }
      }
    }
    return gx;
  }

 private:
  int oh_, ow_;
  std::vector<int> in_shape_;
  BilinearAxis ay_, ax_;
};

// ---------------------------------------------------------------------------
// Channel concat

template <typename T>
inline Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  check_shape4(a, "concat");
  check_shape4(b, "concat");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw DimensionError("concat_channels: spatial/batch mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2), w = a.dim(3);
  Tensor<T> y({n, ca + cb, h, w});
  const std::size_t plane = std::size_t(h) * w;
  for (int s = 0; s < n; ++s) {
    std::copy_n(a.ptr() + std::size_t(s) * ca * plane, ca * plane,
                y.ptr() + std::size_t(s) * (ca + cb) * plane);
    std::copy_n(b.ptr() + std::size_t(s) * cb * plane, cb * plane,
                y.ptr() + std::size_t(s) * (ca + cb) * plane + ca * plane);
  }
  return y;
}

template <typename T>
inline void split_channels_grad(const Tensor<T>& gy, int ca, Tensor<T>& ga, Tensor<T>& gb) {
  const int n = gy.dim(0), c = gy.dim(1), h = gy.dim(2), w = gy.dim(3);
  const int cb = c - ca;
  ga = Tensor<T>({n, ca, h, w});
  gb = Tensor<T>({n, cb, h, w});
  const std::size_t plane = std::size_t(h) * w;
  for (int s = 0; s < n; ++s) {
    std::copy_n(gy.ptr() + std::size_t(s) * c * plane, ca * plane,
                ga.ptr() + std::size_t(s) * ca * plane);
    std::copy_n(gy.ptr() + std::size_t(s) * c * plane + ca * plane, cb * plane,
                gb.ptr() + std::size_t(s) * cb * plane);
  }
}

// ---------------------------------------------------------------------------
// Pre-activation residual block: y = conv2(relu(conv1(relu(x)))) + skip,
// where skip is the identity when channel counts match and a 1x1 projection
// of relu(x) otherwise.

template <typename T>
class ResidualBlock : public Module<T> {
 public:
  ResidualBlock(std::string name, int in_ch, int out_ch)
      : in_ch_(in_ch), out_ch_(out_ch),
        conv1_(name + ".conv1", in_ch, out_ch, 3, 1, 1),
        conv2_(name + ".conv2", out_ch, out_ch, 3, 1, 1) {
    if (in_ch != out_ch)
      proj_ = std::make_unique<Conv2d<T>>(name + ".proj", in_ch, out_ch, 1, 1, 0);
  }

  void init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    if (proj_) proj_->init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> a = relu_in_.forward(x);
    Tensor<T> h = conv2_.forward(relu_mid_.forward(conv1_.forward(a)));
    if (proj_) {
      Tensor<T> skip = proj_->forward(a);
      for (std::size_t i = 0; i < h.numel(); ++i) h.data[i] += skip.data[i];
    } else {
      for (std::size_t i = 0; i < h.numel(); ++i) h.data[i] += x.data[i];
    }
    return h;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> ga = conv1_.backward(relu_mid_.backward(conv2_.backward(gy)));
    if (proj_) {
      Tensor<T> gskip = proj_->backward(gy);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += gskip.data[i];
      return relu_in_.backward(ga);
    }
    Tensor<T> gx = relu_in_.backward(ga);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += gy.data[i];
    return gx;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    conv1_.collect(out);
    conv2_.collect(out);
    if (proj_) proj_->collect(out);
  }

  int out_channels() const { return out_ch_; }

 private:
  int in_ch_, out_ch_;
  Conv2d<T> conv1_, conv2_;
  std::unique_ptr<Conv2d<T>> proj_;
  ReLU<T> relu_in_, relu_mid_;
};

// ---------------------------------------------------------------------------
// MLP head: Linear + ReLU per hidden layer, linear output.

template <typename T>
class Mlp : public Module<T> {
 public:
  Mlp(std::string name, int in_dim, const std::vector<int>& hidden, int out_dim) {
    int cur = in_dim;
    int idx = 0;
    for (int h : hidden) {
      layers_.push_back(std::make_unique<Linear<T>>(name + ".fc" + std::to_string(idx++), cur, h));
      cur = h;
    }
    layers_.push_back(std::make_unique<Linear<T>>(name + ".out", cur, out_dim));
    relus_.resize(hidden.size());
  }

  void init(Rng& rng) {
    for (auto& l : layers_) l->init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i]->forward(h);
      if (i + 1 < layers_.size()) h = relus_[i].forward(h);
    }
    return h;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = gy;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      if (i + 1 < layers_.size()) g = relus_[i].backward(g);
      g = layers_[i]->backward(g);
    }
    return g;
  }

  void collect(std::vector<Parameter<T>*>& out) override {
    for (auto& l : layers_) l->collect(out);
  }

 private:
  std::vector<std::unique_ptr<Linear<T>>> layers_;
  std::vector<ReLU<T>> relus_;
};

// ---------------------------------------------------------------------------
// Adam

template <typename T>
class Adam {
 public:
  explicit Adam(std::vector<Parameter<T>*> params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape);
      v_.emplace_back(p->value.shape);
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Parameter<T>* p = params_[k];
      T* m = m_[k].ptr();
      T* v = v_[k].ptr();
      const T* g = p->grad.ptr();
      T* w = p->value.ptr();
      const std::size_t n = p->numel();
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = T(beta1_) * m[i] + T(1.0 - beta1_) * g[i];
        v[i] = T(beta2_) * v[i] + T(1.0 - beta2_) * g[i] * g[i];
        const double mh = double(m[i]) / bc1;
        const double vh = double(v[i]) / bc2;
        w[i] -= T(lr_ * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }

 private:
  std::vector<Parameter<T>*> params_;
  std::vector<Tensor<T>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

}  // namespace spawnnet::nn
