// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0
//
// Image augmentation, behavior-cloning training and DAgger training with
// MSE action regression.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spawnnet/trajectory.hpp"

namespace spawnnet {

enum class AugmentMode { none, sim_shift, real_shift_jitter };
std::string to_string(AugmentMode m);
AugmentMode augment_mode_from_string(const std::string& s);

struct AugmentConfig {
  AugmentMode mode = AugmentMode::none;
  float p_aug = 0.5f;
  float crop_scale_lo = 0.7f;  // crop area as a fraction of output_size^2
  float crop_scale_hi = 1.0f;
  int pad = 5;               // edge padding, sim_shift only
  float brightness = 0.3f;   // multiplicative jitter, real_shift_jitter only
  int output_size = 224;
};

/// Geometric crop sampled once per observation and shared across frames,
/// views and the depth channel.
struct GeomTransform {
  bool identity = true;
  int pad = 0;
  int crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;  // in padded coordinates
  float brightness_factor = 1.f;                       // RGB channels only
};

GeomTransform sample_geom_transform(const AugmentConfig& cfg, int img_h, int img_w, Rng& rng);
Image apply_geom_transform(const Image& img, const GeomTransform& t, int output_size);

/// With probability p_aug applies the mode's transform, otherwise identity.
Observation augment(const Observation& obs, const AugmentConfig& cfg, Rng& rng);

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 3e-4;
  int steps = 800;  // gradient updates (BC)
  std::uint64_t seed = 0;
  int dagger_iterations = 5;
  int rollouts_per_iteration = 6;
  int updates_per_iteration = 120;  // gradient updates per DAgger iteration
  bool use_cache = true;

  void validate() const;
};

// ---------------------------------------------------------------------------
// MSE loss

/// Mean over batch and action dims of squared differences.
template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& label) {
  if (!pred.same_shape(label)) throw InputError("mse_loss: shape mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double d = double(pred.data[i]) - double(label.data[i]);
    acc += d * d;
  }
  return T(acc / double(pred.numel()));
}

template <typename T>
Tensor<T> mse_loss_grad(const Tensor<T>& pred, const Tensor<T>& label) {
  Tensor<T> g = pred;
  const T scale = T(2) / T(double(pred.numel()));
  for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] = scale * (pred.data[i] - label.data[i]);
  return g;
}

double mse_loss(const std::vector<ActionVector>& pred, const std::vector<ActionVector>& label);

// ---------------------------------------------------------------------------
// Trainers

struct TrainMetrics {
  std::vector<double> loss_curve;  // one entry per gradient update
  bool aug_cache_deviation = false;
  double wall_seconds = 0;
  int env_steps = 0;                       // DAgger only
  std::vector<int> dagger_dataset_sizes;   // labeled pairs after each iteration
};

/// Uniform access to (observation, action) samples, either in-memory or
/// lazily decoded from a trajectory store on disk.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual int size() const = 0;
  /// Stacked observation ending at the sample's step plus its action label.
  virtual void fetch(int index, int frames, int channels, const std::vector<std::string>& views,
                     Observation& obs, ActionVector& action) const = 0;
};

class InMemorySampleSource : public SampleSource {
 public:
  explicit InMemorySampleSource(const std::vector<Trajectory>& demos);
  int size() const override { return int(samples_.size()); }
  void fetch(int index, int frames, int channels, const std::vector<std::string>& views,
             Observation& obs, ActionVector& action) const override;

 private:
  std::vector<std::pair<const Trajectory*, int>> samples_;
};

/// Decodes frames from a trajectory store per fetch; only metadata is held
/// in memory. `traj_ids` selects a subset of the store (empty = all).
class DiskSampleSource : public SampleSource {
 public:
  DiskSampleSource(std::string root, const std::vector<std::string>& traj_ids = {});
  int size() const override { return int(samples_.size()); }
  void fetch(int index, int frames, int channels, const std::vector<std::string>& views,
             Observation& obs, ActionVector& action) const override;

  /// Frame ids of every stored frame (feature-cache keys), sorted.
  std::vector<std::string> all_frame_ids() const;
  /// meta.json of trajectory `id` parsed into a skeleton (no frames).
  const Trajectory& skeleton(const std::string& id) const;
  std::vector<std::string> trajectory_ids() const;

 private:
  struct Entry {
    Trajectory skeleton;  // steps carry actions/ids/metadata, frames empty
  };
  std::string root_;
  std::vector<Entry> trajs_;
  std::vector<std::pair<int, int>> samples_;  // (traj index, step)
};

/// Behavior cloning over stored demonstrations. Trains `policy` in place and
/// returns the loss curve. `features` supplies frozen grids/CLS per frame id
/// (cache-backed or live); may be null for LfS variants. Deterministic for a
/// fixed (dataset, config, seed).
TrainMetrics bc_train(const SampleSource& data, Policy<float>& policy, const TrainConfig& cfg,
                      const AugmentConfig& aug, FeatureProvider* features);
TrainMetrics bc_train(const std::vector<Trajectory>& demos, Policy<float>& policy,
                      const TrainConfig& cfg, const AugmentConfig& aug, FeatureProvider* features);

/// DAgger: rolls out the current policy, labels every visited state with the
/// expert, aggregates (no decay) and fits with MSE updates. Stops after
/// dagger_iterations x rollouts_per_iteration trajectories.
TrainMetrics dagger_train(Env& env, const std::vector<InstanceSpec>& train_instances,
                          const std::function<ActionVector(const EnvState&)>& expert,
                          Policy<float>& policy, const TrainConfig& cfg,
                          const AugmentConfig& aug, const VisionTransformer* backbone);

}  // namespace spawnnet
