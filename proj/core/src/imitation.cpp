// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/imitation.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include "spawnnet/rollout.hpp"

namespace spawnnet {

std::string to_string(AugmentMode m) {
  switch (m) {
    case AugmentMode::none: return "none";
    case AugmentMode::sim_shift: return "sim_shift";
    case AugmentMode::real_shift_jitter: return "real_shift_jitter";
  }
  return "none";
}

AugmentMode augment_mode_from_string(const std::string& s) {
  if (s == "none") return AugmentMode::none;
  if (s == "sim_shift") return AugmentMode::sim_shift;
  if (s == "real_shift_jitter") return AugmentMode::real_shift_jitter;
  throw ConfigError("unknown augment mode: " + s);
}

void TrainConfig::validate() const {
  if (batch_size < 1 || steps < 0 || learning_rate <= 0)
    throw ConfigError("train: bad batch_size/steps/learning_rate");
  if (dagger_iterations < 1 || rollouts_per_iteration < 1 || updates_per_iteration < 1)
    throw ConfigError("train: dagger counts must be positive");
}

GeomTransform sample_geom_transform(const AugmentConfig& cfg, int img_h, int img_w, Rng& rng) {
  GeomTransform t;
  if (cfg.mode == AugmentMode::none) return t;
  if (rng.uniform() >= cfg.p_aug) return t;  // identity branch

  t.identity = false;
  t.pad = cfg.mode == AugmentMode::sim_shift ? cfg.pad : 0;
  const int ph = img_h + 2 * t.pad, pw = img_w + 2 * t.pad;
  // Crop area is relative to the output size, so scale = 1.0 is a pure
  // random shift (a full-size crop of the padded image).
  const double out_area = double(cfg.output_size) * double(cfg.output_size);

  bool placed = false;
  for (int attempt = 0; attempt < 10 && !placed; ++attempt) {
    const double area = out_area * rng.uniform(cfg.crop_scale_lo, cfg.crop_scale_hi);
    const double ratio = std::exp(rng.uniform(std::log(3.0 / 4.0), std::log(4.0 / 3.0)));
    const int cw = int(std::lround(std::sqrt(area * ratio)));
    const int ch = int(std::lround(std::sqrt(area / ratio)));
    if (cw >= 1 && ch >= 1 && cw <= pw && ch <= ph) {
      t.crop_w = cw;
      t.crop_h = ch;
      t.crop_x = int(rng.uniform_int(0, pw - cw));
      t.crop_y = int(rng.uniform_int(0, ph - ch));
      placed = true;
    }
  }
  if (!placed) {  // centered fallback
    t.crop_w = std::min(cfg.output_size, pw);
    t.crop_h = std::min(cfg.output_size, ph);
    t.crop_x = (pw - t.crop_w) / 2;
    t.crop_y = (ph - t.crop_h) / 2;
  }
  if (cfg.mode == AugmentMode::real_shift_jitter)
    t.brightness_factor = float(rng.uniform(1.0 - cfg.brightness, 1.0 + cfg.brightness));
  return t;
}

Image apply_geom_transform(const Image& img, const GeomTransform& t, int output_size) {
  if (t.identity) return img;
  Image out(output_size, output_size, img.c);
  // padded(y, x) = img(clamp(y - pad), clamp(x - pad)): edge padding without
  // materializing the padded image.
  const nn::BilinearAxis ay = nn::bilinear_axis(t.crop_h, output_size);
  const nn::BilinearAxis ax = nn::bilinear_axis(t.crop_w, output_size);
  auto src_y = [&](int i) { return std::clamp(i + t.crop_y - t.pad, 0, img.h - 1); };
  auto src_x = [&](int i) { return std::clamp(i + t.crop_x - t.pad, 0, img.w - 1); };
  const int rgb_channels = img.c >= 3 ? 3 : 0;
  for (int y = 0; y < output_size; ++y) {
    const int y0 = src_y(ay.i0[y]), y1 = src_y(ay.i1[y]);
    const float ty = ay.t[y];
    for (int x = 0; x < output_size; ++x) {
      const int x0 = src_x(ax.i0[x]), x1 = src_x(ax.i1[x]);
      const float tx = ax.t[x];
      for (int c = 0; c < img.c; ++c) {
        const float v00 = img.at(y0, x0, c), v01 = img.at(y0, x1, c);
        const float v10 = img.at(y1, x0, c), v11 = img.at(y1, x1, c);
        const float top = v00 + (v01 - v00) * tx;
        const float bot = v10 + (v11 - v10) * tx;
        float v = top + (bot - top) * ty;
        if (c < rgb_channels && t.brightness_factor != 1.f)
          v = std::clamp(v * t.brightness_factor, 0.f, 1.f);
        out.at(y, x, c) = v;
      }
    }
  }
  return out;
}

Observation augment(const Observation& obs, const AugmentConfig& cfg, Rng& rng) {
  if (obs.frames.empty() || obs.frames[0].empty()) throw InputError("augment: empty observation");
  const Image& first = obs.frames[0][0];
  const GeomTransform t = sample_geom_transform(cfg, first.h, first.w, rng);
  if (t.identity) return obs;
  Observation out = obs;  // ids still reference the original frames
  for (auto& view : out.frames)
    for (auto& frame : view) frame = apply_geom_transform(frame, t, cfg.output_size);
  return out;
}

double mse_loss(const std::vector<ActionVector>& pred, const std::vector<ActionVector>& label) {
  if (pred.size() != label.size() || pred.empty())
    throw InputError("mse_loss: action batches must be non-empty and equal-sized");
  double acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = pred[i].to_array();
    const auto l = label[i].to_array();
    for (int d = 0; d < ActionVector::kDim; ++d) {
      const double diff = double(p[std::size_t(d)]) - double(l[std::size_t(d)]);
      acc += diff * diff;
    }
  }
  return acc / double(pred.size() * ActionVector::kDim);
}

// ---------------------------------------------------------------------------

InMemorySampleSource::InMemorySampleSource(const std::vector<Trajectory>& demos) {
  for (const Trajectory& traj : demos)
    for (int t = 0; t < traj.length(); ++t) samples_.emplace_back(&traj, t);
}

void InMemorySampleSource::fetch(int index, int frames, int channels,
                                 const std::vector<std::string>& views, Observation& obs,
                                 ActionVector& action) const {
  const auto& [traj, t] = samples_.at(std::size_t(index));
  obs = observation_at(*traj, t, frames, channels, &views);
  action = traj->steps[std::size_t(t)].action;
}

DiskSampleSource::DiskSampleSource(std::string root, const std::vector<std::string>& traj_ids)
    : root_(std::move(root)) {
  const std::vector<std::string> ids =
      traj_ids.empty() ? list_trajectories(root_) : traj_ids;
  if (ids.empty()) throw InputError("DiskSampleSource: no trajectories in " + root_);
  for (const std::string& id : ids) {
    Entry e;
    e.skeleton = load_trajectory_meta(root_, id);
    const int traj_index = int(trajs_.size());
    for (int t = 0; t < e.skeleton.length(); ++t) samples_.emplace_back(traj_index, t);
    trajs_.push_back(std::move(e));
  }
}

std::vector<std::string> DiskSampleSource::all_frame_ids() const {
  std::vector<std::string> ids;
  for (const Entry& e : trajs_)
    for (const auto& step : e.skeleton.steps)
      for (const std::string& id : step.frame_ids) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

const Trajectory& DiskSampleSource::skeleton(const std::string& id) const {
  for (const Entry& e : trajs_)
    if (e.skeleton.id == id) return e.skeleton;
  throw LookupError("DiskSampleSource: unknown trajectory " + id);
}

std::vector<std::string> DiskSampleSource::trajectory_ids() const {
  std::vector<std::string> out;
  for (const Entry& e : trajs_) out.push_back(e.skeleton.id);
  return out;
}

void DiskSampleSource::fetch(int index, int frames, int channels,
                             const std::vector<std::string>& views, Observation& obs,
                             ActionVector& action) const {
  const auto& [ti, t] = samples_.at(std::size_t(index));
  const Trajectory& skel = trajs_[std::size_t(ti)].skeleton;
  obs.frames.assign(views.size(), {});
  obs.ids.assign(views.size(), {});
  for (std::size_t vi = 0; vi < views.size(); ++vi) {
    const auto it = std::find(skel.views.begin(), skel.views.end(), views[vi]);
    if (it == skel.views.end())
      throw InputError("DiskSampleSource: trajectory " + skel.id + " has no view " + views[vi]);
    for (int f = frames - 1; f >= 0; --f) {
      const int src = std::max(0, t - f);
      Image full = load_step_frame(root_, skel.id, src, views[vi]);
      if (channels != full.c) {
        Image img(full.h, full.w, channels);
        for (int y = 0; y < full.h; ++y)
          for (int x = 0; x < full.w; ++x)
            for (int c = 0; c < channels; ++c) img.at(y, x, c) = full.at(y, x, c);
        full = std::move(img);
      }
      obs.frames[vi].push_back(std::move(full));
      obs.ids[vi].push_back(skel.steps[std::size_t(src)].frame_ids.at(
          std::size_t(it - skel.views.begin())));
    }
  }
  action = skel.steps[std::size_t(t)].action;
}

namespace {

/// One uniformly sampled batch, one Adam step; returns the batch loss.
double train_step(const SampleSource& data, Policy<float>& policy, nn::Adam<float>& adam,
                  int batch_size, const AugmentConfig& aug, FeatureProvider* features, Rng& rng) {
  const PolicySpec& spec = policy.spec();
  const int channels = spec.encoder.input_channels;

  std::vector<int> picked;
  picked.reserve(std::size_t(batch_size));
  for (int b = 0; b < batch_size; ++b)
    picked.push_back(int(rng.uniform_int(0, std::int64_t(data.size()) - 1)));

  std::vector<Observation> originals(static_cast<std::size_t>(batch_size));
  std::vector<Observation> control;
  std::vector<ActionVector> actions(static_cast<std::size_t>(batch_size));
  control.reserve(std::size_t(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    data.fetch(picked[std::size_t(b)], spec.frames, channels, spec.views,
               originals[std::size_t(b)], actions[std::size_t(b)]);
    if (aug.mode != AugmentMode::none)
      control.push_back(augment(originals[std::size_t(b)], aug, rng));
  }

  Tensor<float> labels({batch_size, spec.action_dim});
  std::vector<const Observation*> obs_ptrs;
  std::vector<const Image*> control_ptrs;
  for (int b = 0; b < batch_size; ++b) {
    obs_ptrs.push_back(&originals[std::size_t(b)]);
    const Observation& ctrl =
        aug.mode != AugmentMode::none ? control[std::size_t(b)] : originals[std::size_t(b)];
    for (const auto& view : ctrl.frames)
      for (const Image& img : view) control_ptrs.push_back(&img);
    const auto target = action_to_target(actions[std::size_t(b)], spec.action_bounds);
    for (int d = 0; d < spec.action_dim; ++d) labels.at2(b, d) = target[std::size_t(d)];
  }

  PolicyInput<float> input = build_policy_input<float>(spec, obs_ptrs, features, &control_ptrs);
  Tensor<float> pred = policy.forward(input.images, input.grids, input.cls);
  const double loss = double(mse_loss(pred, labels));
  adam.zero_grad();
  policy.backward(mse_loss_grad(pred, labels));
  adam.step();
  return loss;
}

/// Keeps every extraction it computes; serves DAgger rollouts and the
/// subsequent update phases from one in-memory store.
class RecordingFeatureProvider : public FeatureProvider {
 public:
  explicit RecordingFeatureProvider(const VisionTransformer& backbone) : backbone_(backbone) {}

  VisionTransformer::DenseExtraction get(const std::string& image_id, const Image& rgb) override {
    auto it = store_.find(image_id);
    if (it != store_.end()) return it->second;
    Image rgb3 = rgb;
    if (rgb.c == 4) {
      rgb3 = Image(rgb.h, rgb.w, 3);
      for (int y = 0; y < rgb.h; ++y)
        for (int x = 0; x < rgb.w; ++x)
          for (int c = 0; c < 3; ++c) rgb3.at(y, x, c) = rgb.at(y, x, c);
    }
    auto ext = backbone_.extract_all(rgb3, image_id);
    store_[image_id] = ext;
    return ext;
  }

 private:
  const VisionTransformer& backbone_;
  std::map<std::string, VisionTransformer::DenseExtraction> store_;
};

}  // namespace

TrainMetrics bc_train(const SampleSource& data, Policy<float>& policy, const TrainConfig& cfg,
                      const AugmentConfig& aug, FeatureProvider* features) {
  cfg.validate();
  if (data.size() == 0) throw InputError("bc_train: empty dataset");
  if (policy.spec().action_dim != ActionVector::kDim)
    throw ConfigError("bc_train: action_dim must be " + std::to_string(ActionVector::kDim));
  const auto t0 = std::chrono::steady_clock::now();

  Rng rng(splitmix64(cfg.seed ^ fnv1a64("bc_train")));
  nn::Adam<float> adam(policy.parameters(), cfg.learning_rate);

  TrainMetrics m;
  m.aug_cache_deviation = aug.mode != AugmentMode::none &&
                          policy.spec().encoder.variant != EncoderVariant::lfs &&
                          policy.spec().encoder.variant != EncoderVariant::lfs_depth;
  for (int step = 0; step < cfg.steps; ++step)
    m.loss_curve.push_back(train_step(data, policy, adam, cfg.batch_size, aug, features, rng));

  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

TrainMetrics bc_train(const std::vector<Trajectory>& demos, Policy<float>& policy,
                      const TrainConfig& cfg, const AugmentConfig& aug,
                      FeatureProvider* features) {
  if (demos.empty()) throw InputError("bc_train: empty dataset");
  InMemorySampleSource source(demos);
  return bc_train(source, policy, cfg, aug, features);
}

TrainMetrics dagger_train(Env& env, const std::vector<InstanceSpec>& train_instances,
                          const std::function<ActionVector(const EnvState&)>& expert,
                          Policy<float>& policy, const TrainConfig& cfg,
                          const AugmentConfig& aug, const VisionTransformer* backbone) {
  cfg.validate();
  if (train_instances.empty()) throw InputError("dagger_train: no training instances");
  if (policy.spec().action_dim != ActionVector::kDim)
    throw ConfigError("dagger_train: action_dim must be " + std::to_string(ActionVector::kDim));
  const auto t0 = std::chrono::steady_clock::now();
  const PolicySpec& spec = policy.spec();
  const ObsConfig obs_cfg = obs_config_from(spec);

  const bool needs_features =
      spec.encoder.is_spawnnet() || spec.encoder.variant == EncoderVariant::frozen_cls;
  std::unique_ptr<RecordingFeatureProvider> provider;
  if (needs_features) {
    if (!backbone) throw ConfigError("dagger_train: this encoder variant needs a backbone");
    provider = std::make_unique<RecordingFeatureProvider>(*backbone);
  }

  Rng rng(splitmix64(cfg.seed ^ fnv1a64("dagger_train")));
  nn::Adam<float> adam(policy.parameters(), cfg.learning_rate);

  TrainMetrics m;
  m.aug_cache_deviation = aug.mode != AugmentMode::none && needs_features;
  std::vector<Trajectory> aggregate;
  int episode = 0;

  for (int iter = 0; iter < cfg.dagger_iterations; ++iter) {
    for (int r = 0; r < cfg.rollouts_per_iteration; ++r, ++episode) {
      const InstanceSpec& inst = train_instances[std::size_t(episode) % train_instances.size()];
      const std::uint64_t seed = rng.next_u64();
      const std::string traj_id = "dagger_" + std::to_string(episode);
      const PolicyFn rollout_policy = [&policy, &provider](const Observation& obs) {
        return act(policy, obs, provider.get());
      };
      try {
        EpisodeResult ep =
            run_episode(env, inst, seed, rollout_policy, obs_cfg, true, &expert, traj_id);
        m.env_steps += ep.steps;
        aggregate.push_back(std::move(ep.traj));
      } catch (const Error& e) {
        std::cerr << "[dagger] dropping episode " << traj_id << ": " << e.what() << "\n";
      }
    }
    // All past data is kept; the source is rebuilt because the vector grew.
    const InMemorySampleSource source(aggregate);
    m.dagger_dataset_sizes.push_back(source.size());
    if (source.size() == 0) continue;
    for (int u = 0; u < cfg.updates_per_iteration; ++u)
      m.loss_curve.push_back(
          train_step(source, policy, adam, cfg.batch_size, aug, provider.get(), rng));
  }

  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

}  // namespace spawnnet
