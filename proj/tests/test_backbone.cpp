// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "spawnnet/backbone.hpp"
#include "spawnnet/rng.hpp"

using namespace spawnnet;

namespace {

BackboneSpec toy_spec(int layers = 2, int embed = 8, int heads = 2, int base_image = 2) {
  BackboneSpec spec;
  spec.model_id = "random:99";
  spec.patch_size = 1;
  spec.stride = 1;
  spec.embed_dim = embed;
  spec.num_layers = layers;
  spec.num_heads = heads;
  spec.extraction_layers = {layers};
  spec.base_image_size = base_image;
  spec.norm_mean = {0.f, 0.f, 0.f};
  spec.norm_std = {1.f, 1.f, 1.f};
  return spec;
}

Image random_image(int h, int w, std::uint64_t seed) {
  Image img(h, w, 3);
  Rng rng(seed);
  for (auto& v : img.data) v = float(rng.uniform());
  return img;
}

// Independent one-block forward (pre-norm ViT block) for the oracle tests.
Eigen::MatrixXf layer_norm_naive(const Eigen::MatrixXf& x, const Eigen::VectorXf& g,
                                 const Eigen::VectorXf& b) {
  Eigen::MatrixXf out = x;
  for (int r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    double var = 0;
    for (int c = 0; c < x.cols(); ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= double(x.cols());
    const double inv = 1.0 / std::sqrt(var + 1e-6);
    for (int c = 0; c < x.cols(); ++c)
      out(r, c) = float((x(r, c) - mean) * inv * g(c) + b(c));
  }
  return out;
}

Eigen::MatrixXf block_forward_naive(const Eigen::MatrixXf& x, const ViTBlockWeights& blk,
                                    int heads) {
  const int c = int(x.cols());
  const int dh = c / heads;
  const Eigen::MatrixXf xn = layer_norm_naive(x, blk.ln1_g, blk.ln1_b);
  Eigen::MatrixXf qkv = xn * blk.qkv_w.transpose();
  qkv.rowwise() += blk.qkv_b.transpose();
  Eigen::MatrixXf attn(x.rows(), c);
  for (int h = 0; h < heads; ++h) {
    attn.middleCols(h * dh, dh) = oracles::attention_naive(
        qkv.middleCols(h * dh, dh), qkv.middleCols(c + h * dh, dh),
        qkv.middleCols(2 * c + h * dh, dh));
  }
  Eigen::MatrixXf x1 = x + ((attn * blk.proj_w.transpose()).rowwise() + blk.proj_b.transpose());
  const Eigen::MatrixXf yn = layer_norm_naive(x1, blk.ln2_g, blk.ln2_b);
  Eigen::MatrixXf h1 = yn * blk.fc1_w.transpose();
  h1.rowwise() += blk.fc1_b.transpose();
  for (Eigen::Index i = 0; i < h1.size(); ++i) {
    const float v = h1.data()[i];
    h1.data()[i] = 0.5f * v * (1.f + std::erff(v * 0.70710678f));
  }
  x1 += (h1 * blk.fc2_w.transpose()).rowwise() + blk.fc2_b.transpose();
  return x1;
}

}  // namespace

TEST_CASE("patchify grid dims and token counts") {
  SUBCASE("224x224 with patch 8 stride 8 gives a 28x28 grid of 384-dim tokens") {
    BackboneSpec spec;  // ViT-S/8 defaults
    spec.model_id = "random:5";
    VisionTransformer vit(spec);
    const TokenSequence seq = vit.patchify(random_image(224, 224, 1));
    CHECK(seq.grid_h == 28);
    CHECK(seq.grid_w == 28);
    CHECK(seq.tokens.rows() == 785);
    CHECK(seq.tokens.cols() == 384);
    CHECK(seq.layer_index == 0);
  }
  SUBCASE("8x8 image with patch 8 stride 8 is a single patch") {
    BackboneSpec spec;
    spec.model_id = "random:5";
    spec.base_image_size = 224;
    VisionTransformer vit(spec);
    const TokenSequence seq = vit.patchify(random_image(8, 8, 2));
    CHECK(seq.grid_h == 1);
    CHECK(seq.grid_w == 1);
    CHECK(seq.tokens.rows() == 2);
  }
  SUBCASE("16x8 image with patch 8 stride 4 gives a 3x1 grid") {
    BackboneSpec spec;
    spec.model_id = "random:5";
    spec.stride = 4;
    VisionTransformer vit(spec);
    const TokenSequence seq = vit.patchify(random_image(16, 8, 3));
    CHECK(seq.grid_h == 3);  // patch origins at rows 0, 4, 8
    CHECK(seq.grid_w == 1);
  }
  SUBCASE("image smaller than one patch names the minimum") {
    BackboneSpec spec;
    spec.model_id = "random:5";
    VisionTransformer vit(spec);
    CHECK_THROWS_WITH_AS(vit.patchify(random_image(4, 224, 4)),
                         doctest::Contains("8x8 patch"), DimensionError);
  }
}

TEST_CASE("backbone spec validation") {
  BackboneSpec spec = toy_spec();
  CHECK_NOTHROW(spec.validate());
  SUBCASE("layer out of range") {
    spec.extraction_layers = {3};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SUBCASE("non-increasing layers") {
    spec.extraction_layers = {2, 2};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SUBCASE("frozen is mandatory") {
    spec.frozen = false;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
}

TEST_CASE("identity key projection returns the pre-norm block input") {
  BackboneSpec spec = toy_spec(2, 8, 2);
  VisionTransformer vit(spec);
  auto& blk = vit.mutable_weights().blocks[0];
  blk.qkv_w.middleRows(8, 8) = Eigen::MatrixXf::Identity(8, 8);  // K rows
  blk.qkv_b.segment(8, 8).setZero();

  const TokenSequence seq = vit.patchify(random_image(2, 2, 7));
  const auto internals = vit.forward_with_internals(seq, {1});
  const AttentionInternals& ai = internals.at(1);
  // concat per-head keys head-major and compare against X = LN1(input)
  for (int r = 0; r < ai.x.rows(); ++r)
    for (int h = 0; h < 2; ++h)
      for (int d = 0; d < 4; ++d)
        CHECK(ai.k[std::size_t(h)](r, d) ==
              doctest::Approx(ai.x(r, h * 4 + d)).epsilon(1e-6));
}

TEST_CASE("attention weights match a hand-built two-token case") {
  AttentionInternals ai;
  ai.head_dim = 1;
  ai.q = {Eigen::MatrixXf(2, 1)};
  ai.k = {Eigen::MatrixXf(2, 1)};
  ai.v = {Eigen::MatrixXf::Identity(2, 2).col(0)};
  ai.q[0] << 1.f, -2.f;
  ai.k[0] << 0.5f, 2.f;
  const Eigen::MatrixXf w = ai.attention_weights(0);
  // d = 1 so weights = softmax(q k^T); row 0: softmax(0.5, 2.0)
  const double e1 = std::exp(0.5), e2 = std::exp(2.0);
  CHECK(w(0, 0) == doctest::Approx(e1 / (e1 + e2)).epsilon(1e-6));
  CHECK(w(0, 1) == doctest::Approx(e2 / (e1 + e2)).epsilon(1e-6));
  const double f1 = std::exp(-1.0), f2 = std::exp(-4.0);
  CHECK(w(1, 0) == doctest::Approx(f1 / (f1 + f2)).epsilon(1e-6));
  CHECK(w(1, 1) == doctest::Approx(f2 / (f1 + f2)).epsilon(1e-6));
}

TEST_CASE("internals at layers 6, 9, 12 of a 12-layer backbone") {
  BackboneSpec spec = toy_spec(12, 8, 2);
  spec.extraction_layers = {6, 9, 12};
  VisionTransformer vit(spec);
  const TokenSequence seq = vit.patchify(random_image(2, 2, 11));
  const auto internals = vit.forward_with_internals(seq, {6, 9, 12});
  REQUIRE(internals.size() == 3);
  for (int layer : {6, 9, 12}) {
    const AttentionInternals& ai = internals.at(layer);
    CHECK(ai.q.size() == 2);
    CHECK(ai.k[0].rows() == seq.patch_count() + 1);
  }
  CHECK_THROWS_AS(vit.forward_with_internals(seq, {13}), ConfigError);
}

TEST_CASE("extracted keys and attention match the naive oracle on a tiny model") {
  // 2 layers, 4 patch tokens (5 total), 2 heads
  BackboneSpec spec = toy_spec(2, 8, 2);
  spec.extraction_layers = {1, 2};
  VisionTransformer vit(spec);
  const Image img = random_image(2, 2, 21);
  const TokenSequence seq = vit.patchify(img);
  const auto internals = vit.forward_with_internals(seq, {1, 2});

  // independent forward through block 1 to obtain block 2's input
  Eigen::MatrixXf x = seq.tokens;
  for (int layer = 1; layer <= 2; ++layer) {
    const ViTBlockWeights& blk = vit.weights().blocks[std::size_t(layer - 1)];
    const AttentionInternals& ai = internals.at(layer);
    const Eigen::MatrixXf xn = layer_norm_naive(x, blk.ln1_g, blk.ln1_b);
    Eigen::MatrixXf qkv = xn * blk.qkv_w.transpose();
    qkv.rowwise() += blk.qkv_b.transpose();
    for (int h = 0; h < 2; ++h) {
      const Eigen::MatrixXf qh = qkv.middleCols(h * 4, 4);
      const Eigen::MatrixXf kh = qkv.middleCols(8 + h * 4, 4);
      for (int r = 0; r < kh.rows(); ++r)
        for (int c = 0; c < 4; ++c) {
          CHECK(ai.k[std::size_t(h)](r, c) == doctest::Approx(kh(r, c)).epsilon(1e-6));
          CHECK(ai.q[std::size_t(h)](r, c) == doctest::Approx(qh(r, c)).epsilon(1e-6));
        }
      const Eigen::MatrixXf weights_got = ai.attention_weights(h);
      const Eigen::MatrixXf weights_want = oracles::attention_weights_naive(qh, kh);
      for (int r = 0; r < weights_got.rows(); ++r) {
        double row_sum = 0;
        for (int c = 0; c < weights_got.cols(); ++c) {
          CHECK(weights_got(r, c) == doctest::Approx(weights_want(r, c)).epsilon(1e-6));
          row_sum += weights_got(r, c);
        }
        CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-6));
      }
    }
    x = block_forward_naive(x, blk, 2);
  }
}

TEST_CASE("dense grids exclude CLS and match the internals") {
  BackboneSpec spec = toy_spec(2, 8, 2, 3);
  spec.extraction_layers = {2};
  VisionTransformer vit(spec);
  const Image img = random_image(3, 3, 31);
  const auto grids = vit.extract_dense(img, "img0");
  const DenseFeatureGrid& g = grids.at(2);
  CHECK(g.h == 3);
  CHECK(g.w == 3);
  CHECK(g.c == 8);
  CHECK(g.kind == DescriptorKind::key);
  CHECK(g.source_image_id == "img0");

  const TokenSequence seq = vit.patchify(img);
  const auto internals = vit.forward_with_internals(seq, {2});
  const AttentionInternals& ai = internals.at(2);
  for (int i = 0; i < 9; ++i) {
    const int y = i / 3, x = i % 3;
    for (int h = 0; h < 2; ++h)
      for (int d = 0; d < 4; ++d)
        CHECK(g.at(y, x, h * 4 + d) == ai.k[std::size_t(h)](i + 1, d));  // bit-exact
  }

  SUBCASE("determinism: identical images give bit-identical grids") {
    const auto again = vit.extract_dense(img, "img0");
    CHECK(again.at(2).data == g.data);
  }
  SUBCASE("single-patch toy grid equals that token's key vector") {
    BackboneSpec one = toy_spec(1, 8, 2, 1);
    one.extraction_layers = {1};
    VisionTransformer vit1(one);
    const Image px = random_image(1, 1, 5);
    const auto grid1 = vit1.extract_dense(px, "px");
    const auto internals1 = vit1.forward_with_internals(vit1.patchify(px), {1});
    for (int h = 0; h < 2; ++h)
      for (int d = 0; d < 4; ++d)
        CHECK(grid1.at(1).at(0, 0, h * 4 + d) == internals1.at(1).k[std::size_t(h)](1, d));
  }
}

TEST_CASE("cls embedding: length, determinism and a one-block hand forward") {
  BackboneSpec spec = toy_spec(1, 8, 2, 2);
  spec.extraction_layers = {1};
  VisionTransformer vit(spec);
  const Image img = random_image(2, 2, 41);
  const auto cls = vit.extract_cls(img);
  REQUIRE(cls.size() == 8);
  CHECK(vit.extract_cls(img) == cls);

  const TokenSequence seq = vit.patchify(img);
  Eigen::MatrixXf x = block_forward_naive(seq.tokens, vit.weights().blocks[0], 2);
  x = layer_norm_naive(x, vit.weights().ln_f_g, vit.weights().ln_f_b);
  for (int c = 0; c < 8; ++c) CHECK(cls[std::size_t(c)] == doctest::Approx(x(0, c)).epsilon(2e-5));
}

TEST_CASE("weight files round-trip exactly") {
  BackboneSpec spec = toy_spec(2, 8, 2);
  VisionTransformer vit(spec);
  const std::string path = (std::filesystem::temp_directory_path() / "toy_vit.bin").string();
  save_vit_weights(path, spec, vit.weights());

  BackboneSpec loaded_spec = spec;
  loaded_spec.model_id = path;
  VisionTransformer loaded(loaded_spec);
  CHECK(loaded.weight_checksum() == vit.weight_checksum());
  CHECK(loaded.param_count() == vit.param_count());
  std::filesystem::remove(path);
}

TEST_CASE("position embeddings interpolate to other grid sizes") {
  BackboneSpec spec = toy_spec(1, 8, 2, 4);  // base grid 4x4
  VisionTransformer vit(spec);
  const TokenSequence seq = vit.patchify(random_image(6, 6, 51));  // 6x6 grid
  CHECK(seq.grid_h == 6);
  for (int r = 0; r < seq.tokens.rows(); ++r)
    for (int c = 0; c < seq.tokens.cols(); ++c) CHECK(std::isfinite(seq.tokens(r, c)));
}
