// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/encoders.hpp"

#include <algorithm>

#include "spawnnet/errors.hpp"

namespace spawnnet {

std::string to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::spawnnet: return "spawnnet";
    case EncoderVariant::spawnnet_depth: return "spawnnet_depth";
    case EncoderVariant::lfs: return "lfs";
    case EncoderVariant::lfs_depth: return "lfs_depth";
    case EncoderVariant::frozen_cls: return "frozen_cls";
  }
  return "spawnnet";
}

EncoderVariant encoder_variant_from_string(const std::string& s) {
  if (s == "spawnnet") return EncoderVariant::spawnnet;
  if (s == "spawnnet_depth") return EncoderVariant::spawnnet_depth;
  if (s == "lfs") return EncoderVariant::lfs;
  if (s == "lfs_depth") return EncoderVariant::lfs_depth;
  if (s == "frozen_cls") return EncoderVariant::frozen_cls;
  throw ConfigError("unknown encoder variant: " + s);
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::zero_pretrained: return "zero_pretrained";
    case Ablation::last_layer_only: return "last_layer_only";
    case Ablation::cls_tiled: return "cls_tiled";
  }
  return "none";
}

Ablation ablation_from_string(const std::string& s) {
  if (s == "none") return Ablation::none;
  if (s == "zero_pretrained") return Ablation::zero_pretrained;
  if (s == "last_layer_only") return Ablation::last_layer_only;
  if (s == "cls_tiled") return Ablation::cls_tiled;
  throw ConfigError("unknown ablation: " + s);
}

namespace {

int conv_out(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

}  // namespace

int EncoderConfig::stage_dim(int i) const {
  int d = conv_out(conv_out(image_size, 4, 4, 0), 3, 2, 1);  // stem
  for (int s = 1; s < i; ++s) d = conv_out(d, 3, 2, 1);      // downsample between stages
  return d;
}

int EncoderConfig::embedding_dim() const {
  switch (variant) {
    case EncoderVariant::spawnnet:
    case EncoderVariant::spawnnet_depth: {
      const int d = stage_dim(int(adapters.size()));
      return arch.fused_width * d * d;
    }
    case EncoderVariant::lfs:
    case EncoderVariant::lfs_depth: {
      int d = conv_out(image_size, 4, 4, 0);
      for (int s = 0; s < arch.lfs_sections; ++s) d = conv_out(d, 3, 2, 1);
      return arch.lfs_width * d * d;
    }
    case EncoderVariant::frozen_cls: return backbone_channels;
  }
  return 0;
}

void EncoderConfig::validate() const {
  if (input_channels != 3 && input_channels != 4)
    throw ConfigError("encoder: input_channels must be 3 or 4");
  if (wants_depth() != (input_channels == 4))
    throw ConfigError("encoder: depth variants require input_channels = 4 and vice versa");
  if (is_spawnnet()) {
    if (adapters.empty()) throw ConfigError("encoder: spawnnet variants need at least 1 adapter");
    for (std::size_t i = 0; i < adapters.size(); ++i) {
      const AdapterSpec& a = adapters[i];
      if (a.projection_width <= 0) throw ConfigError("adapter: projection_width must be > 0");
      if (a.insertion_point != int(i) + 1)
        throw ConfigError("adapter " + std::to_string(i) +
                          ": insertion points must be 1..n in order");
      const int d = stage_dim(a.insertion_point);
      if (d < 1) throw ConfigError("encoder: image_size too small for stage " +
                                   std::to_string(a.insertion_point));
      if (a.target_height != d || a.target_width != d)
        throw ConfigError("adapter " + std::to_string(i) + ": target dims " +
                          std::to_string(a.target_height) + "x" + std::to_string(a.target_width) +
                          " do not match control-stream dims " + std::to_string(d) + "x" +
                          std::to_string(d));
      if (i > 0 && adapters[i - 1].source_layer >= a.source_layer)
        throw ConfigError("adapter source layers must be strictly increasing");
    }
  } else {
    if (!adapters.empty())
      throw ConfigError("encoder: " + to_string(variant) + " must have no adapters");
  }
  if (ablation != Ablation::none && !is_spawnnet())
    throw ConfigError("encoder: ablations only apply to spawnnet variants");
  if (backbone_channels < 1) throw ConfigError("encoder: backbone_channels must be >= 1");
}

std::vector<AdapterSpec> default_adapters(const std::vector<int>& source_layers,
                                          int projection_width, int image_size) {
  EncoderConfig probe;
  probe.image_size = image_size;
  std::vector<AdapterSpec> out;
  for (std::size_t i = 0; i < source_layers.size(); ++i) {
    AdapterSpec a;
    a.source_layer = source_layers[i];
    a.projection_width = projection_width;
    a.insertion_point = int(i) + 1;
    a.target_height = a.target_width = probe.stage_dim(a.insertion_point);
    out.push_back(a);
  }
  return out;
}

void apply_ablation(const EncoderConfig& cfg, std::vector<DenseFeatureGrid>& grids,
                    const std::vector<float>& cls) {
  if (cfg.ablation == Ablation::none) return;
  if (!cfg.is_spawnnet()) throw ConfigError("ablation requested on non-spawnnet variant");
  if (grids.size() != cfg.adapters.size())
    throw InputError("apply_ablation: grid count does not match adapters");
  int deepest = 0;
  for (const AdapterSpec& a : cfg.adapters) deepest = std::max(deepest, a.source_layer);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    DenseFeatureGrid& g = grids[i];
    switch (cfg.ablation) {
      case Ablation::zero_pretrained:
        std::fill(g.data.begin(), g.data.end(), 0.f);
        break;
      case Ablation::last_layer_only:
        if (cfg.adapters[i].source_layer != deepest)
          std::fill(g.data.begin(), g.data.end(), 0.f);
        break;
      case Ablation::cls_tiled: {
        if (int(cls.size()) != g.c)
          throw InputError("cls_tiled: cls dim " + std::to_string(cls.size()) +
                           " does not match grid channels " + std::to_string(g.c));
        for (int y = 0; y < g.h; ++y)
          for (int x = 0; x < g.w; ++x)
            std::copy(cls.begin(), cls.end(),
                      g.data.begin() + (std::size_t(y) * g.w + x) * g.c);
        break;
      }
      case Ablation::none: break;
    }
  }
}

}  // namespace spawnnet
