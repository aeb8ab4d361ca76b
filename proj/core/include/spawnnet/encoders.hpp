// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0
//
// Visual encoders: the two-stream encoder (learnable control stream with
// adapter fusion of frozen backbone features), the learning-from-scratch
// convolutional baseline, the frozen-CLS baseline, and the three ablation
// variants (zero_pretrained / last_layer_only / cls_tiled).

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spawnnet/backbone.hpp"
#include "spawnnet/nn.hpp"

namespace spawnnet {

enum class EncoderVariant { spawnnet, spawnnet_depth, lfs, lfs_depth, frozen_cls };
enum class Ablation { none, zero_pretrained, last_layer_only, cls_tiled };

std::string to_string(EncoderVariant v);
EncoderVariant encoder_variant_from_string(const std::string& s);
std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);

/// One adapter: project the source layer's H x W x C grid to D channels with
/// a 1x1 convolution, bilinearly resize to the control stream's H_l x W_l,
/// concatenate along channels and run two residual blocks.
struct AdapterSpec {
  int source_layer = 0;
  int projection_width = 64;  // D
  int target_height = 0, target_width = 0;
  int insertion_point = 0;  // 1-based control-stream block after which fusion occurs
};

/// Width schedule of the trainable networks. Defaults reproduce the
/// full-scale models; desk-scale configs shrink the widths.
struct ControlStreamSpec {
  int stem_channels = 32;  // first stem conv (4x4 stride 4)
  int learned_width = 64;  // learned map entering each fusion
  int fused_width = 128;   // residual-block width after concat
  int lfs_width = 128;     // LfS channel count
  int lfs_sections = 3;    // LfS conv/pool/res sections
};

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::spawnnet;
  std::vector<AdapterSpec> adapters;
  int input_channels = 3;  // per frame: 3 = RGB, 4 = RGB-D
  Ablation ablation = Ablation::none;
  int image_size = 224;
  int backbone_channels = 384;  // C of the incoming grids / CLS dim
  ControlStreamSpec arch;

  bool is_spawnnet() const {
    return variant == EncoderVariant::spawnnet || variant == EncoderVariant::spawnnet_depth;
  }
  bool is_lfs() const {
    return variant == EncoderVariant::lfs || variant == EncoderVariant::lfs_depth;
  }
  bool wants_depth() const {
    return variant == EncoderVariant::spawnnet_depth || variant == EncoderVariant::lfs_depth;
  }

  /// Spatial dim of the control stream at 1-based stage `i`.
  int stage_dim(int i) const;
  /// Per-image embedding width produced by the encoder.
  int embedding_dim() const;

  void validate() const;
};

/// Adapter target dims for fusions after control blocks 1..n, pairing
/// source layers shallow-to-deep.
std::vector<AdapterSpec> default_adapters(const std::vector<int>& source_layers,
                                          int projection_width, int image_size);

/// Applies the configured ablation to the per-adapter grids in place:
/// zero_pretrained zeroes every grid, last_layer_only zeroes all but the
/// deepest source layer, cls_tiled replaces each grid with `cls` tiled over
/// the grid's spatial extent.
void apply_ablation(const EncoderConfig& cfg, std::vector<DenseFeatureGrid>& grids,
                    const std::vector<float>& cls);

/// Copies a H x W x C grid into sample `n` of a [N, C, H, W] tensor.
template <typename T>
void grid_to_chw(const DenseFeatureGrid& g, Tensor<T>& dst, int n) {
  if (dst.dim(1) != g.c || dst.dim(2) != g.h || dst.dim(3) != g.w)
    throw DimensionError("grid_to_chw: tensor " + dst.shape_str() + " does not match grid");
  T* out = dst.ptr() + std::size_t(n) * g.c * g.h * g.w;
  for (int ch = 0; ch < g.c; ++ch)
    for (int y = 0; y < g.h; ++y)
      for (int x = 0; x < g.w; ++x)
        out[(std::size_t(ch) * g.h + y) * g.w + x] = T(g.at(y, x, ch));
}

// ---------------------------------------------------------------------------

template <typename T>
class Adapter : public nn::Module<T> {
 public:
  Adapter(const std::string& name, int grid_channels, int learned_ch, int fused_ch,
          const AdapterSpec& spec)
      : spec_(spec),
        proj_(name + ".proj", grid_channels, spec.projection_width, 1, 1, 0),
        resize_(spec.target_height, spec.target_width),
        rb1_(name + ".rb1", learned_ch + spec.projection_width, fused_ch),
        rb2_(name + ".rb2", fused_ch, fused_ch),
        learned_ch_(learned_ch) {}

  void init(Rng& rng) {
    proj_.init(rng);
    rb1_.init(rng);
    rb2_.init(rng);
  }

  /// grid: [N, C, Hg, Wg]; learned: [N, learned_ch, H_l, W_l].
  Tensor<T> forward(const Tensor<T>& grid, const Tensor<T>& learned) {
    if (learned.dim(2) != spec_.target_height || learned.dim(3) != spec_.target_width)
      throw ConfigError("adapter at insertion " + std::to_string(spec_.insertion_point) +
                        ": learned map " + learned.shape_str() + " does not match target " +
                        std::to_string(spec_.target_height) + "x" +
                        std::to_string(spec_.target_width));
    Tensor<T> adapted = resize_.forward(proj_.forward(grid));
    Tensor<T> cat = nn::concat_channels(learned, adapted);
    return rb2_.forward(rb1_.forward(cat));
  }

  /// Returns the gradient w.r.t. the learned map; the grid is a frozen input.
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gcat = rb1_.backward(rb2_.backward(gy));
    Tensor<T> g_learned, g_adapted;
    nn::split_channels_grad(gcat, learned_ch_, g_learned, g_adapted);
    proj_.backward(resize_.backward(g_adapted));
    return g_learned;
  }

  /// Per-position L2 norm of the projected (and rectified) pretrained
  /// features at the target resolution: ||relu(resize(proj(grid)))||.
  Tensor<T> norm_map(const Tensor<T>& grid) {
    Tensor<T> z = resize_.forward(proj_.forward(grid));
    const int n = z.dim(0), c = z.dim(1), h = z.dim(2), w = z.dim(3);
    Tensor<T> out({n, h, w});
    for (int s = 0; s < n; ++s)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          T acc = T(0);
          for (int ch = 0; ch < c; ++ch) {
            const T v = std::max(T(0), z.at4(s, ch, y, x));
            acc += v * v;
          }
          out.data[(std::size_t(s) * h + y) * w + x] = std::sqrt(acc);
        }
    return out;
  }

  void collect(std::vector<nn::Parameter<T>*>& out) override {
    proj_.collect(out);
    rb1_.collect(out);
    rb2_.collect(out);
  }

  const AdapterSpec& spec() const { return spec_; }
  nn::Conv2d<T>& projection() { return proj_; }

 private:
  AdapterSpec spec_;
  nn::Conv2d<T> proj_;
  nn::BilinearResize<T> resize_;
  nn::ResidualBlock<T> rb1_, rb2_;
  int learned_ch_;
};

// ---------------------------------------------------------------------------

/// Learnable control stream with adapter fusion. Input images go through a
/// two-conv stem to the first fusion resolution; each stage fuses one
/// pretrained grid and downsampling convs sit between stages.
template <typename T>
class SpawnNetEncoder : public nn::Module<T> {
 public:
  explicit SpawnNetEncoder(const EncoderConfig& cfg)
      : cfg_(cfg),
        stem1_("encoder.stem1", cfg.input_channels, cfg.arch.stem_channels, 4, 4, 0),
        stem2_("encoder.stem2", cfg.arch.stem_channels, cfg.arch.learned_width, 3, 2, 1) {
    const int n = int(cfg.adapters.size());
    for (int i = 0; i < n; ++i) {
      adapters_.push_back(std::make_unique<Adapter<T>>(
          "encoder.adapter" + std::to_string(i + 1), cfg.backbone_channels,
          cfg.arch.learned_width, cfg.arch.fused_width, cfg.adapters[std::size_t(i)]));
      if (i + 1 < n)
        downs_.push_back(std::make_unique<nn::Conv2d<T>>("encoder.down" + std::to_string(i + 1),
                                                         cfg.arch.fused_width,
                                                         cfg.arch.learned_width, 3, 2, 1));
    }
  }

  void init(Rng& rng) {
    stem1_.init(rng);
    stem2_.init(rng);
    for (auto& a : adapters_) a->init(rng);
    for (auto& d : downs_) d->init(rng);
  }

  /// x: [N, input_channels, H, W]; grids[i]: [N, C, Hg, Wg] for adapter i.
  Tensor<T> forward(const Tensor<T>& x, const std::vector<Tensor<T>>& grids) {
    if (grids.size() != adapters_.size())
      throw InputError("spawnnet encoder: got " + std::to_string(grids.size()) +
                       " grids for " + std::to_string(adapters_.size()) + " adapters");
    Tensor<T> h = stem2_.forward(stem_relu_.forward(stem1_.forward(x)));
    for (std::size_t i = 0; i < adapters_.size(); ++i) {
      if (i > 0) h = downs_[i - 1]->forward(h);
      h = adapters_[i]->forward(grids[i], h);
    }
    h = out_relu_.forward(h);
    const int n = h.dim(0);
    return h.reshaped({n, int(h.numel() / std::size_t(n))});
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = out_relu_.backward(last_shape_grad(gy));
    for (std::size_t i = adapters_.size(); i-- > 0;) {
      g = adapters_[i]->backward(g);
      if (i > 0) g = downs_[i - 1]->backward(g);
    }
    return stem1_.backward(stem_relu_.backward(stem2_.backward(g)));
  }

  void collect(std::vector<nn::Parameter<T>*>& out) override {
    stem1_.collect(out);
    stem2_.collect(out);
    for (std::size_t i = 0; i < adapters_.size(); ++i) {
      adapters_[i]->collect(out);
      if (i + 1 < adapters_.size()) downs_[i]->collect(out);
    }
  }

  Adapter<T>& adapter(int i) { return *adapters_[std::size_t(i)]; }
  int num_adapters() const { return int(adapters_.size()); }
  const EncoderConfig& config() const { return cfg_; }

 private:
  Tensor<T> last_shape_grad(const Tensor<T>& gy) const {
    const int n = gy.dim(0);
    const int d = cfg_.stage_dim(int(adapters_.size()));
    return gy.reshaped({n, cfg_.arch.fused_width, d, d});
  }

  EncoderConfig cfg_;
  nn::Conv2d<T> stem1_, stem2_;
  nn::ReLU<T> stem_relu_, out_relu_;
  std::vector<std::unique_ptr<Adapter<T>>> adapters_;
  std::vector<std::unique_ptr<nn::Conv2d<T>>> downs_;
};

// ---------------------------------------------------------------------------

/// Learning-from-scratch encoder: initial 4x4 conv to `lfs_width` channels,
/// then per section a 3x3 conv, 3x3/2 max-pool and two residual layers.
template <typename T>
class LfsEncoder : public nn::Module<T> {
 public:
  explicit LfsEncoder(const EncoderConfig& cfg)
      : cfg_(cfg),
        conv0_("encoder.conv0", cfg.input_channels, cfg.arch.lfs_width, 4, 4, 0) {
    for (int s = 0; s < cfg.arch.lfs_sections; ++s) {
      const std::string p = "encoder.sec" + std::to_string(s + 1);
      convs_.push_back(std::make_unique<nn::Conv2d<T>>(p + ".conv", cfg.arch.lfs_width,
                                                       cfg.arch.lfs_width, 3, 1, 1));
      pools_.emplace_back(3, 2, 1);
      res_.push_back(std::make_unique<nn::ResidualBlock<T>>(p + ".res1", cfg.arch.lfs_width,
                                                            cfg.arch.lfs_width));
      res_.push_back(std::make_unique<nn::ResidualBlock<T>>(p + ".res2", cfg.arch.lfs_width,
                                                            cfg.arch.lfs_width));
    }
  }

  void init(Rng& rng) {
    conv0_.init(rng);
    for (auto& c : convs_) c->init(rng);
    for (auto& r : res_) r->init(rng);
  }

  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> h = conv0_.forward(x);
    for (int s = 0; s < cfg_.arch.lfs_sections; ++s) {
      h = pools_[std::size_t(s)].forward(convs_[std::size_t(s)]->forward(h));
      h = res_[std::size_t(2 * s + 1)]->forward(res_[std::size_t(2 * s)]->forward(h));
    }
    h = out_relu_.forward(h);
    const int n = h.dim(0);
    last_spatial_ = h.dim(2);
    return h.reshaped({n, int(h.numel() / std::size_t(n))});
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> g = gy.reshaped({gy.dim(0), cfg_.arch.lfs_width, last_spatial_, last_spatial_});
    g = out_relu_.backward(g);
    for (int s = cfg_.arch.lfs_sections; s-- > 0;) {
      g = res_[std::size_t(2 * s)]->backward(res_[std::size_t(2 * s + 1)]->backward(g));
      g = convs_[std::size_t(s)]->backward(pools_[std::size_t(s)].backward(g));
    }
    return conv0_.backward(g);
  }

  void collect(std::vector<nn::Parameter<T>*>& out) override {
    conv0_.collect(out);
    for (int s = 0; s < cfg_.arch.lfs_sections; ++s) {
      convs_[std::size_t(s)]->collect(out);
      res_[std::size_t(2 * s)]->collect(out);
      res_[std::size_t(2 * s + 1)]->collect(out);
    }
  }

 private:
  EncoderConfig cfg_;
  nn::Conv2d<T> conv0_;
  std::vector<std::unique_ptr<nn::Conv2d<T>>> convs_;
  std::vector<nn::MaxPool2d<T>> pools_;
  std::vector<std::unique_ptr<nn::ResidualBlock<T>>> res_;
  nn::ReLU<T> out_relu_;
  int last_spatial_ = 0;
};

}  // namespace spawnnet
