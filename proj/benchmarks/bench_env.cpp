// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "spawnnet/bench.hpp"

using namespace spawnnet;

static void BM_EnvRenderRgbd(benchmark::State& state) {
  const CategoryConfig cat = CategoryConfig::builtin("bags");
  const auto instances = generate_instances(cat, 1, 0, 3);
  Env env(cat);
  env.reset(instances[0], 0);
  for (auto _ : state) {
    Image img = env.render_rgbd("global");
    benchmark::DoNotOptimize(img.data.data());
  }
}
BENCHMARK(BM_EnvRenderRgbd)->Unit(benchmark::kMillisecond);

static void BM_ExpertEpisode(benchmark::State& state) {
  const CategoryConfig cat = CategoryConfig::builtin("bags");
  const auto instances = generate_instances(cat, 1, 0, 3);
  Env env(cat);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    env.reset(instances[0], seed++);
    bool done = false;
    int steps = 0;
    while (!done) {
      done = env.step(scripted_expert(env.state(), cat)).done;
      ++steps;
    }
    benchmark::DoNotOptimize(steps);
  }
}
BENCHMARK(BM_ExpertEpisode);
