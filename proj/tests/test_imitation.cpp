// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <numeric>

#include "spawnnet/feature_cache.hpp"
#include "spawnnet/imitation.hpp"
#include "spawnnet/rollout.hpp"

using namespace spawnnet;
namespace fs = std::filesystem;

namespace {

Image marker_image(int size, int my, int mx) {
  Image img(size, size, 3);
  for (auto& v : img.data) v = 0.25f;
  img.at(my, mx, 0) = 1.f;
  img.at(my, mx, 1) = 0.f;
  return img;
}

Trajectory synthetic_trajectory(int steps, int image_size, std::uint64_t seed,
                                const std::string& id = "synth") {
  Rng rng(seed);
  Trajectory traj;
  traj.id = id;
  traj.task_id = "synthetic";
  traj.instance_id = "synthetic_0";
  traj.views = {"global"};
  for (int t = 0; t < steps; ++t) {
    Trajectory::Step step;
    Image img(image_size, image_size, 4);
    for (auto& v : img.data) v = float(rng.uniform());
    step.frames.push_back(std::move(img));
    step.frame_ids.push_back(frame_id(id, t, "global"));
    step.action.dx = float(rng.uniform(-0.05, 0.05));
    step.action.dy = float(rng.uniform(-0.05, 0.05));
    step.action.gripper = rng.uniform() < 0.5 ? 0.f : 1.f;
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

PolicySpec tiny_lfs_policy(int image_size = 16) {
  PolicySpec spec;
  spec.encoder.variant = EncoderVariant::lfs;
  spec.encoder.image_size = image_size;
  spec.encoder.arch.lfs_width = 6;
  spec.encoder.arch.lfs_sections = 1;
  spec.frames = 1;
  spec.views = {"global"};
  spec.mlp_hidden = {16};
  return spec;
}

}  // namespace

TEST_CASE("mse loss examples") {
  SUBCASE("tensor form") {
    Tensor<float> a({2, 1}), b({2, 1});
    a.data = {0.f, 2.f};
    b.data = {1.f, 1.f};
    CHECK(mse_loss(a, b) == doctest::Approx(1.0));  // ((0-1)^2 + (2-1)^2) / 2
    CHECK(mse_loss(a, a) == 0.f);
    Tensor<float> ones = b;
    for (auto& v : ones.data) v += 1.f;
    CHECK(mse_loss(ones, b) == doctest::Approx(1.0));  // unit offset over all dims
    Tensor<float> bad({3, 1});
    CHECK_THROWS_AS(mse_loss(a, bad), InputError);
  }
  SUBCASE("action-vector form") {
    std::vector<ActionVector> pred(3), label(3);
    CHECK(mse_loss(pred, label) == 0.0);
    for (auto& a : pred) {
      a.dx += 1.f;
      a.dy += 1.f;
      a.dz += 1.f;
      a.droll += 1.f;
      a.dpitch += 1.f;
      a.dyaw += 1.f;
      a.gripper += 1.f;
    }
    CHECK(mse_loss(pred, label) == doctest::Approx(1.0));
  }
  SUBCASE("loss gradient matches 2(p - l)/n") {
    Tensor<double> p({2, 2}), l({2, 2});
    p.data = {1, 2, 3, 4};
    l.data = {0, 0, 0, 0};
    const Tensor<double> g = mse_loss_grad(p, l);
    CHECK(g.data[0] == doctest::Approx(2.0 * 1 / 4));
    CHECK(g.data[3] == doctest::Approx(2.0 * 4 / 4));
  }
}

TEST_CASE("augmentation") {
  AugmentConfig cfg;
  cfg.mode = AugmentMode::sim_shift;
  cfg.output_size = 16;
  cfg.pad = 5;

  SUBCASE("p_aug = 0 is the identity") {
    cfg.p_aug = 0.f;
    Observation obs;
    obs.frames = {{marker_image(16, 3, 4)}};
    obs.ids = {{""}};
    Rng rng(1);
    const Observation out = augment(obs, cfg, rng);
    CHECK(out.frames[0][0].data == obs.frames[0][0].data);
  }

  SUBCASE("centered full-size crop of the padded image is the identity") {
    // crop (pad, pad) of size == output lands exactly on the original pixels
    GeomTransform t;
    t.identity = false;
    t.pad = 5;
    t.crop_x = 5;
    t.crop_y = 5;
    t.crop_w = 16;
    t.crop_h = 16;
    const Image img = marker_image(16, 7, 2);
    const Image out = apply_geom_transform(img, t, 16);
    CHECK(out.data == img.data);
  }

  SUBCASE("offset crop shifts content by the hand-indexed amount") {
    GeomTransform t;
    t.identity = false;
    t.pad = 5;
    t.crop_x = 0;  // five pixels into the left edge padding
    t.crop_y = 0;
    t.crop_w = 16;
    t.crop_h = 16;
    const Image img = marker_image(16, 7, 2);
    const Image out = apply_geom_transform(img, t, 16);
    // padded(y, x) = img(clamp(y-5), clamp(x-5)): the marker moves to (12, 7)
    CHECK(out.at(12, 7, 0) == 1.f);
    CHECK(out.at(7, 2, 0) == 0.25f);
  }

  SUBCASE("sampled transforms respect the configured parameter ranges") {
    cfg.p_aug = 1.f;
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
      const GeomTransform t = sample_geom_transform(cfg, 16, 16, rng);
      CHECK_FALSE(t.identity);
      CHECK(t.pad == 5);
      CHECK(t.crop_w >= 1);
      CHECK(t.crop_x >= 0);
      CHECK(t.crop_x + t.crop_w <= 26);
      CHECK(t.crop_y + t.crop_h <= 26);
      const double area = double(t.crop_w) * t.crop_h;
      CHECK(area <= 1.34 * 16 * 16 + 64);  // scale <= 1.0 with rounding slack
      CHECK(t.brightness_factor == 1.f);   // sim mode never jitters color
    }
  }

  SUBCASE("one geometric transform is shared across frames, views and depth") {
    cfg.p_aug = 1.f;
    Observation obs;
    obs.frames = {{marker_image(16, 3, 4), marker_image(16, 3, 4)},
                  {marker_image(16, 3, 4)}};
    // add a depth channel to one frame
    Image rgbd(16, 16, 4);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        for (int c = 0; c < 3; ++c) rgbd.at(y, x, c) = 0.25f;
        rgbd.at(y, x, 3) = 0.25f;
      }
    rgbd.at(3, 4, 0) = 1.f;
    rgbd.at(3, 4, 3) = 1.f;
    obs.frames[1][0] = rgbd;
    obs.ids = {{"", ""}, {""}};
    Rng rng(9);
    const Observation out = augment(obs, cfg, rng);
    // find the marker in each output; all must agree
    auto find_marker = [](const Image& img, int ch) {
      int best = -1;
      float best_v = -1;
      for (int i = 0; i < img.h * img.w; ++i) {
        const float v = img.data[std::size_t(i) * std::size_t(img.c) + std::size_t(ch)];
        if (v > best_v) {
          best_v = v;
          best = i;
        }
      }
      return best;
    };
    const int m0 = find_marker(out.frames[0][0], 0);
    const int m1 = find_marker(out.frames[0][1], 0);
    const int m2 = find_marker(out.frames[1][0], 0);
    const int m2d = find_marker(out.frames[1][0], 3);  // depth follows the geometry
    CHECK(m0 == m1);
    CHECK(m0 == m2);
    CHECK(m0 == m2d);
  }

  SUBCASE("real mode jitters brightness on RGB only") {
    AugmentConfig real;
    real.mode = AugmentMode::real_shift_jitter;
    real.p_aug = 1.f;
    real.output_size = 16;
    Rng rng(11);
    bool saw_non_unity = false;
    for (int i = 0; i < 20; ++i) {
      const GeomTransform t = sample_geom_transform(real, 16, 16, rng);
      CHECK(t.pad == 0);
      CHECK(t.brightness_factor >= 0.7f);
      CHECK(t.brightness_factor <= 1.3f);
      if (t.brightness_factor != 1.f) saw_non_unity = true;
    }
    CHECK(saw_non_unity);
  }
}

TEST_CASE("augmentation never touches the action labels") {
  Trajectory traj = synthetic_trajectory(6, 16, 3);
  const auto actions_before = traj.steps[2].action.to_array();
  AugmentConfig cfg;
  cfg.mode = AugmentMode::sim_shift;
  cfg.p_aug = 1.f;
  cfg.output_size = 16;
  Rng rng(5);
  const Observation obs = observation_at(traj, 2, 1, 4);
  augment(obs, cfg, rng);
  CHECK(traj.steps[2].action.to_array() == actions_before);
}

TEST_CASE("bc memorizes a single repeated pair") {
  PolicySpec spec = tiny_lfs_policy();
  spec.validate();
  Policy<float> policy(spec, 21);

  Trajectory traj = synthetic_trajectory(1, 16, 4);
  traj.steps[0].action.dx = 0.02f;
  traj.steps[0].action.dy = -0.03f;
  traj.steps[0].action.gripper = 1.f;
  std::vector<Trajectory> demos;
  for (int i = 0; i < 4; ++i) {
    Trajectory copy = traj;  // same (obs, action) pair repeated
    copy.id = "synth" + std::to_string(i);
    demos.push_back(std::move(copy));
  }

  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.steps = 500;
  cfg.learning_rate = 3e-3;
  cfg.seed = 1;
  AugmentConfig no_aug;
  const TrainMetrics metrics = bc_train(demos, policy, cfg, no_aug, nullptr);
  REQUIRE(metrics.loss_curve.size() == 500);
  CHECK(metrics.loss_curve.back() < 1e-4);
}

TEST_CASE("bc fits a realizable teacher") {
  PolicySpec spec = tiny_lfs_policy();
  Policy<float> teacher(spec, 31);
  Policy<float> student(spec, 32);

  std::vector<Trajectory> demos;
  Rng rng(33);
  for (int d = 0; d < 3; ++d) {
    Trajectory traj = synthetic_trajectory(10, 16, 100 + std::uint64_t(d),
                                           "teach" + std::to_string(d));
    for (int t = 0; t < traj.length(); ++t) {
      const Observation obs = observation_at(traj, t, spec.frames, spec.encoder.input_channels);
      const ActionVector teacher_action = act(teacher, obs, nullptr);
      traj.steps[std::size_t(t)].action = teacher_action;
    }
    demos.push_back(std::move(traj));
  }

  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.steps = 400;
  cfg.learning_rate = 2e-3;
  cfg.seed = 2;
  AugmentConfig no_aug;
  const TrainMetrics metrics = bc_train(demos, student, cfg, no_aug, nullptr);
  const double head =
      std::accumulate(metrics.loss_curve.begin(), metrics.loss_curve.begin() + 20, 0.0) / 20;
  const double tail =
      std::accumulate(metrics.loss_curve.end() - 20, metrics.loss_curve.end(), 0.0) / 20;
  CHECK(tail < 0.2 * head);  // realizable target: loss collapses
}

TEST_CASE("bc training is deterministic in (dataset, config, seed)") {
  auto run = [](std::uint64_t seed) {
    PolicySpec spec = tiny_lfs_policy();
    Policy<float> policy(spec, 41);
    std::vector<Trajectory> demos = {synthetic_trajectory(8, 16, 7)};
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.steps = 30;
    cfg.seed = seed;
    AugmentConfig aug;
    aug.mode = AugmentMode::sim_shift;
    aug.p_aug = 0.5f;
    aug.output_size = 16;
    const TrainMetrics metrics = bc_train(demos, policy, cfg, aug, nullptr);
    std::vector<float> fingerprint;
    for (auto* p : policy.parameters())
      fingerprint.insert(fingerprint.end(), p->value.data.begin(), p->value.data.end());
    return std::make_pair(metrics.loss_curve, fingerprint);
  };
  const auto a = run(9), b = run(9), c = run(10);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first != c.first);
}

TEST_CASE("bc rejects empty datasets") {
  PolicySpec spec = tiny_lfs_policy();
  Policy<float> policy(spec, 1);
  TrainConfig cfg;
  AugmentConfig aug;
  std::vector<Trajectory> empty;
  CHECK_THROWS_AS(bc_train(empty, policy, cfg, aug, nullptr), InputError);
}

TEST_CASE("dagger bookkeeping and self-consistency") {
  const CategoryConfig cat = CategoryConfig::builtin("bags");
  const auto instances = generate_instances(cat, 2, 0, 51);

  SUBCASE("expert-labeled rollouts match the expert's own actions") {
    Env env(cat);
    const PolicyFn expert_policy = [&env](const Observation&) {
      return scripted_expert(env.state(), env.category());
    };
    const ExpertFn expert = [&cat](const EnvState& s) { return scripted_expert(s, cat); };
    ObsConfig obs;
    obs.frames = 1;
    const EpisodeResult labeled =
        run_episode(env, instances[0], 3, expert_policy, obs, true, &expert);
    const EpisodeResult executed = run_episode(env, instances[0], 3, expert_policy, obs, true);
    REQUIRE(labeled.success);
    REQUIRE(labeled.steps == executed.steps);
    for (int t = 0; t < executed.traj.length(); ++t)
      CHECK(labeled.traj.steps[std::size_t(t)].action.to_array() ==
            executed.traj.steps[std::size_t(t)].action.to_array());
    CHECK(labeled.traj.length() == labeled.steps + 1);  // terminal state is labeled too
    CHECK(labeled.traj.source == Trajectory::Source::policy_rollout);
  }

  SUBCASE("dataset grows by rollouts x episode lengths and never shrinks") {
    PolicySpec spec = tiny_lfs_policy(224);
    spec.encoder.arch.lfs_width = 4;
    Policy<float> policy(spec, 61);
    Env env(cat);
    const ExpertFn expert = [&cat](const EnvState& s) { return scripted_expert(s, cat); };
    TrainConfig cfg;
    cfg.batch_size = 2;
    cfg.dagger_iterations = 2;
    cfg.rollouts_per_iteration = 2;
    cfg.updates_per_iteration = 2;
    cfg.seed = 5;
    AugmentConfig no_aug;
    const TrainMetrics metrics = dagger_train(env, instances, expert, policy, cfg, no_aug, nullptr);
    REQUIRE(metrics.dagger_dataset_sizes.size() == 2);
    CHECK(metrics.dagger_dataset_sizes[0] > 0);
    CHECK(metrics.dagger_dataset_sizes[1] >= metrics.dagger_dataset_sizes[0]);
    // env_steps counts executed steps; each step contributes one labeled pair
    // plus one terminal label per episode
    CHECK(metrics.dagger_dataset_sizes[1] == metrics.env_steps + 4);
    CHECK(metrics.loss_curve.size() == 4);
  }
}

TEST_CASE("cache-backed and live training produce the same loss curve") {
  // tiny backbone + tiny spawnnet; augmentation off
  BackboneSpec bspec;
  bspec.model_id = "random:77";
  bspec.patch_size = 8;
  bspec.stride = 8;
  bspec.embed_dim = 8;
  bspec.num_layers = 2;
  bspec.num_heads = 2;
  bspec.extraction_layers = {1, 2};
  bspec.base_image_size = 16;
  VisionTransformer backbone(bspec);

  PolicySpec spec;
  spec.encoder.variant = EncoderVariant::spawnnet;
  spec.encoder.image_size = 16;
  spec.encoder.backbone_channels = 8;
  spec.encoder.arch.stem_channels = 4;
  spec.encoder.arch.learned_width = 4;
  spec.encoder.arch.fused_width = 6;
  spec.encoder.adapters = default_adapters({1, 2}, 3, 16);
  spec.frames = 1;
  spec.views = {"global"};
  spec.mlp_hidden = {8};
  spec.validate();

  std::vector<Trajectory> demos = {synthetic_trajectory(6, 16, 71)};

  const auto cache_dir =
      (fs::temp_directory_path() / "sn_cache_equiv").string();
  fs::remove_all(cache_dir);
  std::vector<std::pair<std::string, Image>> items;
  for (const auto& step : demos[0].steps) {
    Image rgb(16, 16, 3);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = step.frames[0].at(y, x, c);
    items.emplace_back(step.frame_ids[0], rgb);
  }
  build_cache(backbone, items, cache_dir);

  TrainConfig cfg;
  cfg.batch_size = 3;
  cfg.steps = 25;
  cfg.seed = 4;
  AugmentConfig no_aug;

  Policy<float> policy_live(spec, 81);
  LiveFeatureProvider live(backbone);
  const TrainMetrics live_metrics = bc_train(demos, policy_live, cfg, no_aug, &live);

  Policy<float> policy_cached(spec, 81);
  CachedFeatureProvider cached(cache_dir, bspec.hash());
  const TrainMetrics cached_metrics = bc_train(demos, policy_cached, cfg, no_aug, &cached);

  REQUIRE(live_metrics.loss_curve.size() == cached_metrics.loss_curve.size());
  for (std::size_t i = 0; i < live_metrics.loss_curve.size(); ++i) {
    const double rel = std::abs(live_metrics.loss_curve[i] - cached_metrics.loss_curve[i]) /
                       std::max(1e-12, std::abs(live_metrics.loss_curve[i]));
    CHECK(rel <= 1e-5);
  }
  fs::remove_all(cache_dir);
}
