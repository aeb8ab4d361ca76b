// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "spawnnet/backbone.hpp"
#include "spawnnet/rng.hpp"

using namespace spawnnet;

namespace {
Image test_image(int size) {
  Image img(size, size, 3);
  Rng rng(7);
  for (auto& v : img.data) v = float(rng.uniform());
  return img;
}
}  // namespace

static void BM_DeskBackboneExtract(benchmark::State& state) {
  BackboneSpec spec;
  spec.model_id = "random:1";
  spec.patch_size = 16;
  spec.stride = 16;
  spec.embed_dim = 96;
  spec.num_layers = 12;
  spec.num_heads = 6;
  spec.extraction_layers = {6, 9, 12};
  VisionTransformer vit(spec);
  const Image img = test_image(224);
  for (auto _ : state) {
    auto grids = vit.extract_dense(img, "bench");
    benchmark::DoNotOptimize(grids);
  }
}
BENCHMARK(BM_DeskBackboneExtract)->Unit(benchmark::kMillisecond);

static void BM_VitS8Extract(benchmark::State& state) {
  BackboneSpec spec;  // ViT-S/8 dims, random weights
  spec.model_id = "random:1";
  VisionTransformer vit(spec);
  const Image img = test_image(224);
  for (auto _ : state) {
    auto grids = vit.extract_dense(img, "bench");
    benchmark::DoNotOptimize(grids);
  }
}
BENCHMARK(BM_VitS8Extract)->Unit(benchmark::kMillisecond)->Iterations(3);
