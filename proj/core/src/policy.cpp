// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/policy.hpp"

#include <algorithm>
#include <cmath>

#include "spawnnet/errors.hpp"

namespace spawnnet {

void PolicySpec::validate() const {
  encoder.validate();
  if (proprioception)
    throw ConfigError("policy: proprioception must be false; policies are image-only");
  if (action_dim < 1 || action_dim > ActionVector::kDim)
    throw ConfigError("policy: action_dim out of range");
  if (frames < 1) throw ConfigError("policy: frames must be >= 1");
  if (views.empty()) throw ConfigError("policy: at least one view required");
  for (int h : mlp_hidden)
    if (h < 1) throw ConfigError("policy: mlp_hidden entries must be positive");
}

Observation assemble(const std::vector<FrameBuffer>& per_view, int frames) {
  if (per_view.empty()) throw InputError("assemble: no views");
  Observation obs;
  obs.frames.resize(per_view.size());
  obs.ids.resize(per_view.size());
  int h = -1, w = -1, c = -1;
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    const FrameBuffer& buf = per_view[v];
    if (buf.size() == 0) throw InputError("assemble: empty frame buffer for view " + std::to_string(v));
    for (int f = frames - 1; f >= 0; --f) {  // oldest first
      const std::size_t back_idx = std::min(std::size_t(f), buf.size() - 1);
      const auto& [id, img] = buf.at_from_back(back_idx);
      if (h < 0) {
        h = img.h;
        w = img.w;
        c = img.c;
      } else if (img.h != h || img.w != w || img.c != c) {
        throw InputError("assemble: inconsistent frame sizes across the buffer");
      }
      obs.frames[v].push_back(img);
      obs.ids[v].push_back(id);
    }
  }
  return obs;
}

VisionTransformer::DenseExtraction LiveFeatureProvider::get(const std::string& image_id,
                                                            const Image& rgb) {
  if (!image_id.empty()) {
    auto it = memo_.find(image_id);
    if (it != memo_.end()) return it->second;
  }
  Image rgb3 = rgb;
  if (rgb.c == 4) {  // backbone always sees RGB
    rgb3 = Image(rgb.h, rgb.w, 3);
    for (int y = 0; y < rgb.h; ++y)
      for (int x = 0; x < rgb.w; ++x)
        for (int ch = 0; ch < 3; ++ch) rgb3.at(y, x, ch) = rgb.at(y, x, ch);
  }
  auto ext = backbone_.extract_all(rgb3, image_id);
  if (!image_id.empty()) {
    memo_[image_id] = ext;
    order_.push_back(image_id);
    if (order_.size() > capacity_) {
      memo_.erase(order_.front());
      order_.pop_front();
    }
  }
  return ext;
}

VisionTransformer::DenseExtraction CachedFeatureProvider::get(const std::string& image_id,
                                                              const Image&) {
  VisionTransformer::DenseExtraction out;
  for (int layer : reader_.manifest().layers) out.grids[layer] = reader_.read(image_id, layer);
  if (reader_.manifest().has_cls) out.cls = reader_.read_cls(image_id);
  return out;
}

namespace {

template <typename T>
void image_to_chw(const Image& img, Tensor<T>& dst, int n, int channels) {
  if (img.c < channels)
    throw DimensionError("observation frame has " + std::to_string(img.c) +
                         " channels, policy expects " + std::to_string(channels));
  T* out = dst.ptr() + std::size_t(n) * channels * img.h * img.w;
  for (int ch = 0; ch < channels; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        out[(std::size_t(ch) * img.h + y) * img.w + x] = T(normalize_pixel(img.at(y, x, ch)));
}

}  // namespace

template <typename T>
PolicyInput<T> build_policy_input(const PolicySpec& spec,
                                  const std::vector<const Observation*>& batch,
                                  FeatureProvider* provider,
                                  const std::vector<const Image*>* control_images) {
  const EncoderConfig& enc = spec.encoder;
  const int per = spec.images_per_obs();
  const int total = int(batch.size()) * per;
  const int size = enc.image_size;

  PolicyInput<T> input;
  const bool needs_features = enc.is_spawnnet() || enc.variant == EncoderVariant::frozen_cls;
  if (needs_features && !provider)
    throw InputError("policy input: this encoder variant needs a feature provider");

  input.images = Tensor<T>({total, enc.input_channels, size, size});
  if (enc.is_spawnnet()) {
    for (const AdapterSpec& a : enc.adapters) {
      (void)a;
      input.grids.emplace_back();  // shaped after the first grid arrives
    }
  }
  input.cls = Tensor<T>({total, enc.backbone_channels});

  int idx = 0;
  for (const Observation* obs : batch) {
    if (int(obs->frames.size()) != int(spec.views.size()))
      throw InputError("observation view count does not match policy spec");
    for (std::size_t v = 0; v < obs->frames.size(); ++v) {
      if (int(obs->frames[v].size()) != spec.frames)
        throw InputError("observation frame count does not match policy spec");
      for (int f = 0; f < spec.frames; ++f, ++idx) {
        const Image& stored = obs->frames[v][std::size_t(f)];
        const Image* control = control_images ? (*control_images)[std::size_t(idx)] : &stored;
        if (control->h != size || control->w != size)
          throw DimensionError("observation frame is not image_size x image_size");
        image_to_chw(*control, input.images, idx, enc.input_channels);

        if (needs_features) {
          auto ext = provider->get(obs->ids[v][std::size_t(f)], stored);
          if (enc.is_spawnnet()) {
            std::vector<DenseFeatureGrid> grids;
            for (const AdapterSpec& a : enc.adapters) {
              auto it = ext.grids.find(a.source_layer);
              if (it == ext.grids.end())
                throw InputError("missing dense grid for configured layer " +
                                 std::to_string(a.source_layer));
              grids.push_back(it->second);
            }
            apply_ablation(enc, grids, ext.cls);
            for (std::size_t ai = 0; ai < grids.size(); ++ai) {
              Tensor<T>& gt = input.grids[ai];
              if (gt.rank() == 0 || gt.numel() == 0)
                gt = Tensor<T>({total, grids[ai].c, grids[ai].h, grids[ai].w});
              grid_to_chw(grids[ai], gt, idx);
            }
          }
          if (!ext.cls.empty()) {
            if (int(ext.cls.size()) != enc.backbone_channels)
              throw InputError("cls dim does not match encoder.backbone_channels");
            for (int i = 0; i < enc.backbone_channels; ++i)
              input.cls.at2(idx, i) = T(ext.cls[std::size_t(i)]);
          }
        }
      }
    }
  }
  return input;
}

template PolicyInput<float> build_policy_input<float>(const PolicySpec&,
                                                      const std::vector<const Observation*>&,
                                                      FeatureProvider*,
                                                      const std::vector<const Image*>*);
template PolicyInput<double> build_policy_input<double>(const PolicySpec&,
                                                        const std::vector<const Observation*>&,
                                                        FeatureProvider*,
                                                        const std::vector<const Image*>*);

ActionVector action_from_raw(const std::array<float, ActionVector::kDim>& raw,
                             const std::array<float, 6>& bounds) {
  auto squash = [&](int i) {
    const float v = std::clamp(raw[std::size_t(i)], -1.f, 1.f);
    return v * bounds[std::size_t(i)];
  };
  ActionVector a;
  a.dx = squash(0);
  a.dy = squash(1);
  a.dz = squash(2);
  a.droll = squash(3);
  a.dpitch = squash(4);
  a.dyaw = squash(5);
  a.gripper = std::clamp(raw[6], 0.f, 1.f);
  return a;
}

std::array<float, ActionVector::kDim> action_to_target(const ActionVector& a,
                                                       const std::array<float, 6>& bounds) {
  std::array<float, ActionVector::kDim> t{};
  const std::array<float, 6> cont = {a.dx, a.dy, a.dz, a.droll, a.dpitch, a.dyaw};
  for (int i = 0; i < 6; ++i)
    t[std::size_t(i)] =
        bounds[std::size_t(i)] > 0.f
            ? std::clamp(cont[std::size_t(i)] / bounds[std::size_t(i)], -1.f, 1.f)
            : 0.f;
  t[6] = std::clamp(a.gripper, 0.f, 1.f);
  return t;
}

ActionVector act(Policy<float>& policy, const Observation& obs, FeatureProvider* provider) {
  if (policy.spec().action_dim != ActionVector::kDim)
    throw ConfigError("act: action_dim must be " + std::to_string(ActionVector::kDim) +
                      " to decompose into an ActionVector");
  std::vector<const Observation*> batch = {&obs};
  PolicyInput<float> input = build_policy_input<float>(policy.spec(), batch, provider);
  Tensor<float> out = policy.forward(input.images, input.grids, input.cls);
  std::array<float, ActionVector::kDim> raw{};
  for (int i = 0; i < ActionVector::kDim; ++i) raw[std::size_t(i)] = out.at2(0, i);
  return action_from_raw(raw, policy.spec().action_bounds);
}

}  // namespace spawnnet
