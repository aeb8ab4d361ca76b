// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "spawnnet/encoders.hpp"
#include "spawnnet/imitation.hpp"

using namespace spawnnet;

static void BM_Conv2dForward(benchmark::State& state) {
  const int batch = int(state.range(0));
  Rng rng(1);
  nn::Conv2d<float> conv("bench.conv", 64, 64, 3, 1, 1);
  conv.init(rng);
  Tensor<float> x({batch, 64, 28, 28});
  for (auto& v : x.data) v = float(rng.uniform(-1, 1));
  for (auto _ : state) {
    auto y = conv.forward(x);
    benchmark::DoNotOptimize(y.data.data());
  }
  const double macs = double(batch) * 28 * 28 * 9 * 64 * 64;
  state.counters["GFLOP/s"] =
      benchmark::Counter(2 * macs, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::OneK::kIs1000);
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(8);

static void BM_SpawnNetEncoderFwdBwd(benchmark::State& state) {
  const int batch = int(state.range(0));
  Rng rng(2);
  EncoderConfig cfg;
  cfg.variant = EncoderVariant::spawnnet;
  cfg.input_channels = 3;
  cfg.backbone_channels = 96;
  cfg.arch.stem_channels = 16;
  cfg.arch.learned_width = 32;
  cfg.arch.fused_width = 64;
  cfg.adapters = default_adapters({6, 9, 12}, 32, 224);
  cfg.validate();
  SpawnNetEncoder<float> enc(cfg);
  enc.init(rng);
  Tensor<float> x({batch, 3, 224, 224});
  for (auto& v : x.data) v = float(rng.uniform(-1, 1));
  std::vector<Tensor<float>> grids;
  for (int i = 0; i < 3; ++i) {
    Tensor<float> g({batch, 96, 14, 14});
    for (auto& v : g.data) v = float(rng.uniform(-1, 1));
    grids.push_back(std::move(g));
  }
  for (auto _ : state) {
    Tensor<float> y = enc.forward(x, grids);
    Tensor<float> g = y;
    for (auto& v : g.data) v *= 1e-3f;
    auto gx = enc.backward(g);
    benchmark::DoNotOptimize(gx.data.data());
  }
  state.counters["img/s"] = benchmark::Counter(
      double(batch), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_SpawnNetEncoderFwdBwd)->Arg(8)->Unit(benchmark::kMillisecond);
