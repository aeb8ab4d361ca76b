// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spawnnet/encoders.hpp"
#include "spawnnet/feature_cache.hpp"

namespace spawnnet {

/// Continuous delta end-effector command plus a gripper value in [0, 1]
/// (> 0.5 executes as close). The planar benchmark uses (dx, dy, gripper)
/// with the remaining dims held at zero.
struct ActionVector {
  float dx = 0, dy = 0, dz = 0;
  float droll = 0, dpitch = 0, dyaw = 0;
  float gripper = 0.5f;

  static constexpr int kDim = 7;

  std::array<float, kDim> to_array() const { return {dx, dy, dz, droll, dpitch, dyaw, gripper}; }
  static ActionVector from_array(const std::array<float, kDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
  }
};

struct PolicySpec {
  EncoderConfig encoder;
  std::vector<int> mlp_hidden = {256, 128};
  int action_dim = ActionVector::kDim;
  bool proprioception = false;  // must stay false: images are the only input
  int frames = 4;
  std::vector<std::string> views = {"global"};
  // Max |value| per continuous dim; a zero bound pins that dim to zero.
  std::array<float, 6> action_bounds = {0.05f, 0.05f, 0.f, 0.f, 0.f, 0.f};

  int images_per_obs() const { return frames * int(views.size()); }
  int mlp_input_dim() const { return images_per_obs() * encoder.embedding_dim(); }
  void validate() const;
};

/// Stacked frames per view, oldest first. Image channel count matches the
/// encoder config (3 = RGB, 4 = RGB-D); ids key the feature cache.
struct Observation {
  std::vector<std::vector<Image>> frames;        // [view][frame]
  std::vector<std::vector<std::string>> ids;     // [view][frame]
};

/// Rolling per-view frame history used during rollouts.
class FrameBuffer {
 public:
  void push(std::string id, Image frame) {
    entries_.emplace_back(std::move(id), std::move(frame));
    if (entries_.size() > 64) entries_.pop_front();
  }
  std::size_t size() const { return entries_.size(); }
  const std::pair<std::string, Image>& at_from_back(std::size_t i) const {
    return entries_[entries_.size() - 1 - i];
  }

 private:
  std::deque<std::pair<std::string, Image>> entries_;
};

/// F most-recent frames per view, oldest first; repeats the earliest frame
/// when the episode has produced fewer than F.
Observation assemble(const std::vector<FrameBuffer>& per_view, int frames);

// ---------------------------------------------------------------------------
// Feature providers: dense grids + CLS for the frozen stream, either
// computed live or read from the on-disk cache by image id.

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual VisionTransformer::DenseExtraction get(const std::string& image_id,
                                                 const Image& rgb) = 0;
};

class LiveFeatureProvider : public FeatureProvider {
 public:
  explicit LiveFeatureProvider(const VisionTransformer& backbone, std::size_t memo_capacity = 256)
      : backbone_(backbone), capacity_(memo_capacity) {}

  VisionTransformer::DenseExtraction get(const std::string& image_id, const Image& rgb) override;

 private:
  const VisionTransformer& backbone_;
  std::size_t capacity_;
  std::map<std::string, VisionTransformer::DenseExtraction> memo_;
  std::deque<std::string> order_;
};

class CachedFeatureProvider : public FeatureProvider {
 public:
  CachedFeatureProvider(std::string dir, std::uint64_t spec_hash) : reader_(std::move(dir), spec_hash) {}

  VisionTransformer::DenseExtraction get(const std::string& image_id, const Image&) override;

 private:
  FeatureCacheReader reader_;
};

// ---------------------------------------------------------------------------

template <typename T>
class SigmoidLastDim {
 public:
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y = x;
    const int d = y.dim(1);
    for (int s = 0; s < y.dim(0); ++s) {
      T& v = y.data[std::size_t(s) * d + d - 1];
      v = T(1) / (T(1) + std::exp(-v));
    }
    y_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx = gy;
    const int d = gx.dim(1);
    for (int s = 0; s < gx.dim(0); ++s) {
      const T v = y_.data[std::size_t(s) * d + d - 1];
      gx.data[std::size_t(s) * d + d - 1] *= v * (T(1) - v);
    }
    return gx;
  }

 private:
  Tensor<T> y_;
};

/// Visuomotor policy: encoder per image, embeddings concatenated view-major
/// (frames oldest-first within a view), MLP head, sigmoid on the gripper dim.
/// Continuous dims come out unsquashed; `act` clamps them to the configured
/// bounds. The frozen backbone is never part of this module's parameters.
template <typename T>
class Policy : public nn::Module<T> {
 public:
  Policy(PolicySpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
    spec_.validate();
    if (spec_.encoder.is_spawnnet())
      spawn_ = std::make_unique<SpawnNetEncoder<T>>(spec_.encoder);
    else if (spec_.encoder.is_lfs())
      lfs_ = std::make_unique<LfsEncoder<T>>(spec_.encoder);
    mlp_ = std::make_unique<nn::Mlp<T>>("mlp", spec_.mlp_input_dim(), spec_.mlp_hidden,
                                        spec_.action_dim);
    Rng rng(splitmix64(init_seed ^ 0x706f6c696379ull));
    if (spawn_) spawn_->init(rng);
    if (lfs_) lfs_->init(rng);
    mlp_->init(rng);
  }

  /// images: [B*I, ch, H, W] with I = images_per_obs(), obs-major then
  /// view-major, frames oldest first. grids: one [B*I, C, Hg, Wg] tensor per
  /// adapter. cls: [B*I, C] (only read by frozen_cls). Returns [B, action_dim]
  /// with the gripper dim squashed to [0, 1].
  Tensor<T> forward(const Tensor<T>& images, const std::vector<Tensor<T>>& grids,
                    const Tensor<T>& cls) {
    const int per = spec_.images_per_obs();
    Tensor<T> emb;
    if (spawn_) {
      emb = spawn_->forward(images, grids);
    } else if (lfs_) {
      emb = lfs_->forward(images);
    } else {
      if (cls.rank() != 2 || cls.dim(1) != spec_.encoder.backbone_channels)
        throw InputError("frozen_cls policy: bad cls tensor");
      emb = cls;
    }
    const int batch = emb.dim(0) / per;
    if (batch * per != emb.dim(0))
      throw InputError("policy forward: image count not a multiple of frames*views");
    Tensor<T> flat = emb.reshaped({batch, per * emb.dim(1)});
    return squash_.forward(mlp_->forward(flat));
  }

  /// Accumulates parameter gradients; returns nothing (inputs are leaves).
  void backward(const Tensor<T>& grad_out) {
    Tensor<T> g = mlp_->backward(squash_.backward(grad_out));
    if (!spawn_ && !lfs_) return;  // frozen_cls: embedding is a frozen input
    const int per = spec_.images_per_obs();
    const int e = spec_.encoder.embedding_dim();
    Tensor<T> gemb = g.reshaped({g.dim(0) * per, e});
    if (spawn_)
      spawn_->backward(gemb);
    else
      lfs_->backward(gemb);
  }

  void collect(std::vector<nn::Parameter<T>*>& out) override {
    if (spawn_) spawn_->collect(out);
    if (lfs_) lfs_->collect(out);
    mlp_->collect(out);
  }

  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> out;
    collect(out);
    return out;
  }

  std::size_t count_trainable() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->numel();
    return n;
  }

  const PolicySpec& spec() const { return spec_; }
  SpawnNetEncoder<T>* spawnnet_encoder() { return spawn_.get(); }

 private:
  PolicySpec spec_;
  std::unique_ptr<SpawnNetEncoder<T>> spawn_;
  std::unique_ptr<LfsEncoder<T>> lfs_;
  std::unique_ptr<nn::Mlp<T>> mlp_;
  SigmoidLastDim<T> squash_;
};

// ---------------------------------------------------------------------------
// Observation -> tensor plumbing shared by training and rollouts.

template <typename T>
struct PolicyInput {
  Tensor<T> images;
  std::vector<Tensor<T>> grids;
  Tensor<T> cls;
};

/// Control-stream pixel normalization.
inline float normalize_pixel(float v) { return v - 0.5f; }

/// Lays out a batch of observations as policy tensors and fetches frozen
/// features via `provider` (must be non-null unless the variant is lfs).
/// `control_images`, when given, override the control-stream pixels (used to
/// feed augmented frames while the backbone sees the originals); it has one
/// entry per (obs, view, frame) in layout order.
template <typename T>
PolicyInput<T> build_policy_input(const PolicySpec& spec,
                                  const std::vector<const Observation*>& batch,
                                  FeatureProvider* provider,
                                  const std::vector<const Image*>* control_images = nullptr);

ActionVector act(Policy<float>& policy, const Observation& obs, FeatureProvider* provider);

/// Maps a raw policy output row to a bounded ActionVector.
ActionVector action_from_raw(const std::array<float, ActionVector::kDim>& raw,
                             const std::array<float, 6>& bounds);

/// Normalized regression target for an executed action (inverse of
/// action_from_raw's clamping, gripper kept in [0, 1]).
std::array<float, ActionVector::kDim> action_to_target(const ActionVector& a,
                                                       const std::array<float, 6>& bounds);

}  // namespace spawnnet
