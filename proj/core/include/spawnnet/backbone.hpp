// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spawnnet/image.hpp"

namespace spawnnet {

enum class DescriptorKind { key, query, value, token };

std::string to_string(DescriptorKind k);
DescriptorKind descriptor_kind_from_string(const std::string& s);

/// Frozen vision-transformer configuration. `model_id` is either
/// "random:<seed>" (deterministic random weights) or a path to a binary
/// weight file (see docs/WEIGHTS in the README).
struct BackboneSpec {
  std::string model_id = "random:0";
  int patch_size = 8;
  int stride = 8;
  int embed_dim = 384;
  int num_layers = 12;
  int num_heads = 6;
  float mlp_ratio = 4.f;
  std::vector<int> extraction_layers = {6, 9, 12};  // 1-based
  bool frozen = true;
  DescriptorKind descriptor = DescriptorKind::key;
  std::array<float, 3> norm_mean = {0.485f, 0.456f, 0.406f};
  std::array<float, 3> norm_std = {0.229f, 0.224f, 0.225f};
  int base_image_size = 224;  // native grid of the stored position embedding

  /// Grid size along one image dimension; < 1 means the image is too small.
  int grid_dim(int image_dim) const { return (image_dim - patch_size) / stride + 1; }
  int head_dim() const { return embed_dim / num_heads; }
  int mlp_hidden() const { return int(float(embed_dim) * mlp_ratio); }

  void validate() const;
  std::uint64_t hash() const;
};

/// One CLS token plus grid_h*grid_w patch tokens at some layer.
struct TokenSequence {
  Eigen::MatrixXf tokens;  // (N+1) x C, row 0 is CLS
  int grid_h = 0, grid_w = 0;
  int layer_index = 0;

  int patch_count() const { return grid_h * grid_w; }
};

/// Q/K/V of one MHSA block, split per head, plus the normalized block input
/// X the projections were computed from.
struct AttentionInternals {
  std::vector<Eigen::MatrixXf> q, k, v;  // per head: (N+1) x head_dim
  Eigen::MatrixXf x;                     // (N+1) x C, after the block's pre-norm
  int head_dim = 0;

  /// softmax(q k^T / sqrt(head_dim)) for one head.
  Eigen::MatrixXf attention_weights(int head) const;
};

/// Spatial grid of per-patch descriptors, row-major H x W x C. Per-head
/// vectors are concatenated head-major so C equals the embed dim. The CLS
/// token is never part of the grid.
struct DenseFeatureGrid {
  std::vector<float> data;
  int h = 0, w = 0, c = 0;
  int layer_index = 0;
  DescriptorKind kind = DescriptorKind::key;
  std::string source_image_id;

  float at(int y, int x, int ch) const {
    return data[(std::size_t(y) * w + x) * c + ch];
  }
};

struct ViTBlockWeights {
  Eigen::VectorXf ln1_g, ln1_b, ln2_g, ln2_b;
  Eigen::MatrixXf qkv_w;  // 3C x C
  Eigen::VectorXf qkv_b;
  Eigen::MatrixXf proj_w;  // C x C
  Eigen::VectorXf proj_b;
  Eigen::MatrixXf fc1_w;  // hidden x C
  Eigen::VectorXf fc1_b;
  Eigen::MatrixXf fc2_w;  // C x hidden
  Eigen::VectorXf fc2_b;
};

struct ViTWeights {
  Eigen::MatrixXf patch_w;  // C x (3 * patch * patch)
  Eigen::VectorXf patch_b;
  Eigen::VectorXf cls_token;
  Eigen::MatrixXf pos_embed;  // (base_N + 1) x C
  std::vector<ViTBlockWeights> blocks;
  Eigen::VectorXf ln_f_g, ln_f_b;
};

/// Frozen ViT backbone. Weights are immutable after construction; extraction
/// is a pure function of (image, weights, spec) and safe to call from
/// multiple threads.
class VisionTransformer {
 public:
  explicit VisionTransformer(BackboneSpec spec);

  const BackboneSpec& spec() const { return spec_; }

  /// Patch-embed + CLS + (resized) position embeddings; layer index 0.
  TokenSequence patchify(const Image& rgb) const;

  /// Runs the full stack once; captures MHSA internals at the requested
  /// 1-based layers. `final_tokens`, when non-null, receives the post-final-
  /// norm token sequence; `layer_outputs` receives the captured layers'
  /// block outputs (used by the `token` descriptor kind).
  std::map<int, AttentionInternals> forward_with_internals(
      const TokenSequence& input, const std::vector<int>& layers,
      TokenSequence* final_tokens = nullptr,
      std::map<int, Eigen::MatrixXf>* layer_outputs = nullptr) const;

  /// Per-layer dense descriptor grids for spec().extraction_layers.
  std::map<int, DenseFeatureGrid> extract_dense(const Image& rgb,
                                                const std::string& image_id) const;

  /// Final-layer CLS embedding (after the final layer norm).
  std::vector<float> extract_cls(const Image& rgb) const;

  /// Grids and CLS from a single forward pass.
  struct DenseExtraction {
    std::map<int, DenseFeatureGrid> grids;
    std::vector<float> cls;
  };
  DenseExtraction extract_all(const Image& rgb, const std::string& image_id) const;

  std::uint64_t weight_checksum() const;
  std::size_t param_count() const;

  const ViTWeights& weights() const { return w_; }
  /// Test hook: toy models overwrite weights directly.
  ViTWeights& mutable_weights() { return w_; }

 private:
  Eigen::MatrixXf position_embedding(int grid_h, int grid_w) const;
  std::map<int, DenseFeatureGrid> extract_grids(const Image& rgb, const std::string& image_id,
                                                TokenSequence* final_tokens) const;

  BackboneSpec spec_;
  ViTWeights w_;
};

/// Writes weights in the binary format `load_vit_weights` reads.
void save_vit_weights(const std::string& path, const BackboneSpec& spec, const ViTWeights& w);
ViTWeights load_vit_weights(const std::string& path, const BackboneSpec& spec);

}  // namespace spawnnet
