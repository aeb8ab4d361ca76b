// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "oracles.hpp"
#include "spawnnet/encoders.hpp"

using namespace spawnnet;

namespace {

template <typename T>
void fill_random(Tensor<T>& t, Rng& rng, double scale = 1.0) {
  for (auto& v : t.data) v = T(rng.uniform(-scale, scale));
}

EncoderConfig small_spawnnet_config(int image_size = 64, int n_adapters = 3,
                                    Ablation ablation = Ablation::none) {
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::spawnnet;
  cfg.ablation = ablation;
  cfg.image_size = image_size;
  cfg.backbone_channels = 12;
  cfg.input_channels = 3;
  cfg.arch.stem_channels = 4;
  cfg.arch.learned_width = 6;
  cfg.arch.fused_width = 10;
  std::vector<int> layers;
  for (int i = 0; i < n_adapters; ++i) layers.push_back(6 + 3 * i);
  cfg.adapters = default_adapters(layers, 5, image_size);
  cfg.validate();
  return cfg;
}

DenseFeatureGrid random_grid(int h, int w, int c, int layer, Rng& rng) {
  DenseFeatureGrid g;
  g.h = h;
  g.w = w;
  g.c = c;
  g.layer_index = layer;
  g.data.resize(std::size_t(h) * w * c);
  for (auto& v : g.data) v = float(rng.uniform(-1, 1));
  return g;
}

}  // namespace

TEST_CASE("adapter pipeline is exactly conv1x1 -> resize -> concat -> two residual blocks") {
  Rng rng(5);
  AdapterSpec spec;
  spec.source_layer = 6;
  spec.projection_width = 4;
  spec.target_height = 4;
  spec.target_width = 4;
  spec.insertion_point = 1;
  Adapter<float> adapter("t.adapter", 7, 3, 5, spec);
  adapter.init(rng);

  Tensor<float> grid({2, 7, 2, 2});
  Tensor<float> learned({2, 3, 4, 4});
  fill_random(grid, rng);
  fill_random(learned, rng);
  const Tensor<float> got = adapter.forward(grid, learned);

  // independent composition with the adapter's own weights
  std::vector<nn::Parameter<float>*> params;
  adapter.collect(params);
  auto find = [&params](const std::string& name) -> nn::Parameter<float>* {
    for (auto* p : params)
      if (p->name == name) return p;
    REQUIRE(false);
    return nullptr;
  };
  const Tensor<float> projected = oracles::conv2d_naive(
      grid, find("t.adapter.proj.weight")->value, find("t.adapter.proj.bias")->value, 1, 0);
  const Tensor<float> resized = oracles::bilinear_naive(projected, 4, 4);
  const Tensor<float> cat = nn::concat_channels(learned, resized);
  auto res_block = [&](const Tensor<float>& x, const std::string& prefix, bool proj) {
    Tensor<float> a = x;
    for (auto& v : a.data) v = std::max(0.f, v);
    Tensor<float> h = oracles::conv2d_naive(a, find(prefix + ".conv1.weight")->value,
                                            find(prefix + ".conv1.bias")->value, 1, 1);
    for (auto& v : h.data) v = std::max(0.f, v);
    h = oracles::conv2d_naive(h, find(prefix + ".conv2.weight")->value,
                              find(prefix + ".conv2.bias")->value, 1, 1);
    if (proj) {
      const Tensor<float> skip = oracles::conv2d_naive(a, find(prefix + ".proj.weight")->value,
                                                       find(prefix + ".proj.bias")->value, 1, 0);
      for (std::size_t i = 0; i < h.numel(); ++i) h.data[i] += skip.data[i];
    } else {
      for (std::size_t i = 0; i < h.numel(); ++i) h.data[i] += x.data[i];
    }
    return h;
  };
  const Tensor<float> want = res_block(res_block(cat, "t.adapter.rb1", true), "t.adapter.rb2", false);

  REQUIRE(got.shape == want.shape);
  for (std::size_t i = 0; i < got.numel(); ++i)
    CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-6));
}

TEST_CASE("adapter norm map") {
  Rng rng(6);
  AdapterSpec spec;
  spec.projection_width = 3;
  spec.target_height = 2;
  spec.target_width = 2;
  spec.insertion_point = 1;
  Adapter<float> adapter("t.ad", 4, 2, 4, spec);
  adapter.init(rng);

  SUBCASE("zero grid with zero bias gives an all-zero heatmap") {
    adapter.projection().bias().value.fill(0.f);
    Tensor<float> grid({1, 4, 2, 2});
    const Tensor<float> heat = adapter.norm_map(grid);
    for (float v : heat.data) CHECK(v == 0.f);
  }
  SUBCASE("heatmaps are non-negative") {
    Tensor<float> grid({1, 4, 2, 2});
    fill_random(grid, rng);
    const Tensor<float> heat = adapter.norm_map(grid);
    for (float v : heat.data) CHECK(v >= 0.f);
  }
  SUBCASE("1x1 grid heatmap equals the hand-computed vector norm") {
    AdapterSpec one = spec;
    one.target_height = one.target_width = 1;
    Adapter<float> tiny("t.tiny", 4, 2, 4, one);
    tiny.init(rng);
    Tensor<float> grid({1, 4, 1, 1});
    fill_random(grid, rng);
    const Tensor<float> heat = tiny.norm_map(grid);
    // by hand: relu(1x1 conv) then L2 norm over channels
    std::vector<nn::Parameter<float>*> params;
    tiny.collect(params);
    const auto& w = params[0]->value;  // proj.weight [3,4,1,1]
    const auto& b = params[1]->value;
    double acc = 0;
    for (int o = 0; o < 3; ++o) {
      double z = b.data[std::size_t(o)];
      for (int c = 0; c < 4; ++c) z += double(w.data[std::size_t(o) * 4 + c]) * grid.data[std::size_t(c)];
      z = std::max(0.0, z);
      acc += z * z;
    }
    CHECK(heat.data[0] == doctest::Approx(std::sqrt(acc)).epsilon(1e-5));
  }
}

TEST_CASE("spawnnet encoder end-to-end shapes (paper-style widths)") {
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::spawnnet;
  cfg.image_size = 64;
  cfg.backbone_channels = 384;
  cfg.arch = ControlStreamSpec{};  // 64-channel learned maps, D=64, 128 fused
  cfg.adapters = default_adapters({6, 9, 12}, 64, 64);
  cfg.validate();
  SpawnNetEncoder<float> enc(cfg);
  Rng rng(7);
  enc.init(rng);
  Tensor<float> x({1, 3, 64, 64});
  fill_random(x, rng);
  std::vector<Tensor<float>> grids;
  for (int i = 0; i < 3; ++i) {
    Tensor<float> g({1, 384, 8, 8});
    fill_random(g, rng);
    grids.push_back(std::move(g));
  }
  const Tensor<float> emb = enc.forward(x, grids);
  CHECK(emb.dim(1) == cfg.embedding_dim());
  CHECK(emb.all_finite());
}

TEST_CASE("shape schedule holds across random valid configs") {
  Rng rng(8);
  for (int trial = 0; trial < 6; ++trial) {
    const int image = std::vector<int>{32, 64, 96}[std::size_t(rng.uniform_int(0, 2))];
    const int n_adapters = int(rng.uniform_int(1, 3));
    EncoderConfig cfg = small_spawnnet_config(image, n_adapters);
    SpawnNetEncoder<float> enc(cfg);
    enc.init(rng);
    Tensor<float> x({2, 3, image, image});
    fill_random(x, rng);
    std::vector<Tensor<float>> grids;
    for (int i = 0; i < n_adapters; ++i) {
      Tensor<float> g({2, 12, 5, 5});
      fill_random(g, rng);
      grids.push_back(std::move(g));
    }
    const Tensor<float> emb = enc.forward(x, grids);
    CHECK(emb.dim(0) == 2);
    CHECK(emb.dim(1) == cfg.embedding_dim());
    CHECK(emb.all_finite());
  }
}

TEST_CASE("encoder config validation") {
  EncoderConfig cfg = small_spawnnet_config();
  SUBCASE("bad adapter target dims") {
    cfg.adapters[1].target_height += 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("lfs must not carry adapters") {
    cfg.variant = EncoderVariant::lfs;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("ablation on non-spawnnet variant") {
    EncoderConfig lfs;
    lfs.variant = EncoderVariant::lfs;
    lfs.ablation = Ablation::zero_pretrained;
    CHECK_THROWS_AS(lfs.validate(), ConfigError);
  }
  SUBCASE("depth variants need 4 channels") {
    cfg.variant = EncoderVariant::spawnnet_depth;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("ablation grid transforms") {
  Rng rng(9);
  EncoderConfig cfg = small_spawnnet_config(64, 3);
  std::vector<float> cls(12);
  for (auto& v : cls) v = float(rng.uniform(-1, 1));

  auto make_grids = [&rng]() {
    std::vector<DenseFeatureGrid> grids;
    Rng local = rng.split("grids");
    for (int i = 0; i < 3; ++i) grids.push_back(random_grid(5, 5, 12, 6 + 3 * i, local));
    return grids;
  };

  SUBCASE("zero_pretrained zeroes everything") {
    cfg.ablation = Ablation::zero_pretrained;
    auto grids = make_grids();
    apply_ablation(cfg, grids, cls);
    for (const auto& g : grids)
      for (float v : g.data) CHECK(v == 0.f);
  }
  SUBCASE("last_layer_only keeps only the deepest source layer") {
    cfg.ablation = Ablation::last_layer_only;
    auto grids = make_grids();
    const auto before = grids[2].data;
    apply_ablation(cfg, grids, cls);
    for (float v : grids[0].data) CHECK(v == 0.f);
    for (float v : grids[1].data) CHECK(v == 0.f);
    CHECK(grids[2].data == before);
  }
  SUBCASE("cls_tiled makes every position equal to the CLS vector") {
    cfg.ablation = Ablation::cls_tiled;
    auto grids = make_grids();
    apply_ablation(cfg, grids, cls);
    for (const auto& g : grids) {
      CHECK(g.h == 5);  // tiled to the same dimensions
      CHECK(g.w == 5);
      CHECK(g.c == 12);
      for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x)
          for (int c = 0; c < 12; ++c) CHECK(g.at(y, x, c) == cls[std::size_t(c)]);
    }
  }
  SUBCASE("ablation on non-spawnnet throws") {
    EncoderConfig lfs;
    lfs.variant = EncoderVariant::lfs;
    lfs.ablation = Ablation::zero_pretrained;  // invalid, validate() would reject
    std::vector<DenseFeatureGrid> grids;
    CHECK_THROWS_AS(apply_ablation(lfs, grids, cls), ConfigError);
  }
}

TEST_CASE("ablation behavioral contracts") {
  Rng rng(10);
  EncoderConfig cfg = small_spawnnet_config(64, 3);
  std::vector<float> cls(12);
  for (auto& v : cls) v = float(rng.uniform(-1, 1));

  auto grids_from_seed = [](std::uint64_t seed) {
    Rng local(seed);
    std::vector<DenseFeatureGrid> grids;
    for (int i = 0; i < 3; ++i) grids.push_back(random_grid(5, 5, 12, 6 + 3 * i, local));
    return grids;
  };
  auto encode = [&](const EncoderConfig& config, SpawnNetEncoder<float>& enc,
                    std::vector<DenseFeatureGrid> grids) {
    apply_ablation(config, grids, cls);
    Tensor<float> x({1, 3, 64, 64});
    Rng ix(77);
    fill_random(x, ix);
    std::vector<Tensor<float>> gts;
    for (const auto& g : grids) {
      Tensor<float> gt({1, g.c, g.h, g.w});
      grid_to_chw(g, gt, 0);
      gts.push_back(std::move(gt));
    }
    return enc.forward(x, gts);
  };

  SUBCASE("zero_pretrained output is invariant to the backbone image") {
    cfg.ablation = Ablation::zero_pretrained;
    SpawnNetEncoder<float> enc(cfg);
    enc.init(rng);
    const auto a = encode(cfg, enc, grids_from_seed(1));
    const auto b = encode(cfg, enc, grids_from_seed(2));  // a different backbone image
    CHECK(a.data == b.data);
  }
  SUBCASE("last_layer_only is invariant to perturbing non-final grids") {
    cfg.ablation = Ablation::last_layer_only;
    SpawnNetEncoder<float> enc(cfg);
    enc.init(rng);
    auto grids = grids_from_seed(3);
    const auto a = encode(cfg, enc, grids);
    auto perturbed = grids;
    for (auto& v : perturbed[0].data) v += 10.f;  // layer-6 grid
    const auto b = encode(cfg, enc, perturbed);
    CHECK(a.data == b.data);
    auto final_perturbed = grids;
    for (auto& v : final_perturbed[2].data) v += 10.f;  // layer-12 grid
    const auto c = encode(cfg, enc, final_perturbed);
    CHECK(a.data != c.data);
  }
  SUBCASE("cls_tiled pretrained branch is spatially constant after projection") {
    cfg.ablation = Ablation::cls_tiled;
    SpawnNetEncoder<float> enc(cfg);
    enc.init(rng);
    auto grids = grids_from_seed(4);
    apply_ablation(cfg, grids, cls);
    for (int a = 0; a < 3; ++a) {
      Tensor<float> gt({1, 12, 5, 5});
      grid_to_chw(grids[std::size_t(a)], gt, 0);
      // 1x1 conv preserves spatial constancy; the norm map makes it visible
      const Tensor<float> heat = enc.adapter(a).norm_map(gt);
      for (float v : heat.data) CHECK(v == doctest::Approx(heat.data[0]).epsilon(1e-6));
    }
  }
  SUBCASE("zero_pretrained differs from the full model on a generic input") {
    EncoderConfig full = cfg;
    full.ablation = Ablation::none;
    SpawnNetEncoder<float> enc(full);
    enc.init(rng);
    const auto with_features = encode(full, enc, grids_from_seed(5));
    EncoderConfig zeroed = cfg;
    zeroed.ablation = Ablation::zero_pretrained;
    const auto without = encode(zeroed, enc, grids_from_seed(5));
    CHECK(with_features.data != without.data);
  }
}

TEST_CASE("lfs encoder basics") {
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::lfs;
  cfg.image_size = 64;
  cfg.arch.lfs_width = 8;
  cfg.arch.lfs_sections = 2;
  cfg.validate();
  LfsEncoder<float> enc(cfg);
  Rng rng(12);
  enc.init(rng);

  SUBCASE("zero input with zero biases gives a zero embedding") {
    Tensor<float> x({1, 3, 64, 64});
    const Tensor<float> emb = enc.forward(x);
    for (float v : emb.data) CHECK(v == 0.f);
  }
  SUBCASE("finite embedding of the declared width") {
    Tensor<float> x({2, 3, 64, 64});
    fill_random(x, rng);
    const Tensor<float> emb = enc.forward(x);
    CHECK(emb.dim(1) == cfg.embedding_dim());
    CHECK(emb.all_finite());
  }
}
