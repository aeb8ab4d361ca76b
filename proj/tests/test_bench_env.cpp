// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "spawnnet/rollout.hpp"

using namespace spawnnet;

namespace {

EpisodeResult expert_episode(Env& env, const InstanceSpec& inst, std::uint64_t seed) {
  const PolicyFn expert = [&env](const Observation&) {
    return scripted_expert(env.state(), env.category());
  };
  ObsConfig obs;
  obs.frames = 1;
  return run_episode(env, inst, seed, expert, obs, false);
}

}  // namespace

TEST_CASE("instance generation: determinism, counts and split disjointness") {
  const CategoryConfig cfg = CategoryConfig::builtin("bags");
  const auto a = generate_instances(cfg, 3, 6, 42);
  const auto b = generate_instances(cfg, 3, 6, 42);
  REQUIRE(a.size() == 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].shape.noise_seed == b[i].shape.noise_seed);
    CHECK(a[i].color == b[i].color);
  }
  int train = 0, heldout = 0;
  for (const auto& inst : a) (inst.split == Split::train ? train : heldout)++;
  CHECK(train == 3);
  CHECK(heldout == 6);
  for (const auto& h : a)
    if (h.split == Split::heldout)
      for (const auto& t : a)
        if (t.split == Split::train)
          CHECK(instance_param_distance(h, t) >= cfg.min_param_distance);

  SUBCASE("train-only suite") { CHECK(generate_instances(cfg, 3, 0, 1).size() == 3); }
  SUBCASE("degenerate ranges fail") {
    CategoryConfig bad = cfg;
    bad.scale_min = 0.1f;
    bad.scale_max = 0.05f;
    CHECK_THROWS_AS(generate_instances(bad, 3, 6, 1), GenerationError);
  }
  SUBCASE("impossible disjointness fails loudly") {
    CategoryConfig narrow = cfg;
    narrow.min_param_distance = 10.f;  // unreachable
    CHECK_THROWS_AS(generate_instances(narrow, 3, 3, 1), GenerationError);
  }
}

TEST_CASE("env kinematics") {
  const CategoryConfig cfg = CategoryConfig::builtin("bags");
  const auto instances = generate_instances(cfg, 1, 0, 11);
  Env env(cfg);
  env.reset(instances[0], 0);
  const EnvState start = env.state();

  SUBCASE("zero action leaves everything but the step count unchanged") {
    ActionVector zero;
    zero.gripper = 0.f;
    env.step(zero);
    const EnvState& s = env.state();
    CHECK(s.gripper_x == start.gripper_x);
    CHECK(s.gripper_y == start.gripper_y);
    CHECK(s.obj_x == start.obj_x);
    CHECK(s.step_count == 1);
    CHECK_FALSE(s.grasped);
  }
  SUBCASE("motion deltas are clamped") {
    ActionVector big;
    big.dx = 10.f;
    big.dy = -10.f;
    big.gripper = 0.f;
    env.step(big);
    CHECK(env.state().gripper_x == doctest::Approx(start.gripper_x + Env::kMaxStep));
    CHECK(env.state().gripper_y == doctest::Approx(start.gripper_y - Env::kMaxStep));
  }
  SUBCASE("grasp outside the radius stays false") {
    const auto handle = env.handle_world();
    const float d = std::hypot(env.state().gripper_x - handle[0],
                               env.state().gripper_y - handle[1]);
    REQUIRE(d > Env::kGraspRadius);  // gripper starts far from the object
    ActionVector close;
    close.gripper = 1.f;
    const auto r = env.step(close);
    CHECK_FALSE(r.flags.grasped);
    CHECK_FALSE(env.state().grasped);
  }
  SUBCASE("step after done throws") {
    Env done_env(cfg);
    done_env.reset(instances[0], 1);
    ActionVector zero;
    zero.gripper = 0.f;
    for (int t = 0; t < Env::kHorizon; ++t) done_env.step(zero);
    CHECK(done_env.state().done);
    CHECK_THROWS_AS(done_env.step(zero), StateError);
  }
}

TEST_CASE("scripted expert phase rules") {
  const CategoryConfig bags = CategoryConfig::builtin("bags");
  const auto instances = generate_instances(bags, 1, 0, 13);
  Env env(bags);
  env.reset(instances[0], 3);

  // drive to the handle with the expert; once within the radius it closes
  int steps = 0;
  while (!env.state().grasped && steps < Env::kHorizon) {
    const ActionVector a = scripted_expert(env.state(), bags);
    const auto handle = env.handle_world();
    const float d = std::hypot(env.state().gripper_x - handle[0],
                               env.state().gripper_y - handle[1]);
    if (d <= Env::kGraspRadius * 0.6f) CHECK(a.gripper == 1.f);  // at handle: grasp
    env.step(a);
    ++steps;
  }
  CHECK(env.state().grasped);

  SUBCASE("tools expert releases inside the tray") {
    const CategoryConfig tools = CategoryConfig::builtin("tools_to_tray");
    const auto tool_insts = generate_instances(tools, 1, 0, 17);
    Env tenv(tools);
    tenv.reset(tool_insts[0], 5);
    bool saw_release = false;
    while (!tenv.state().done) {
      const ActionVector a = scripted_expert(tenv.state(), tools);
      if (tenv.state().grasped && tools.goal.contains(tenv.state().obj_x, tenv.state().obj_y)) {
        CHECK(a.gripper == 0.f);  // grasped at goal: release
        saw_release = true;
      }
      tenv.step(a);
    }
    CHECK(saw_release);
    CHECK(tenv.state().succeeded);
  }
}

TEST_CASE("expert clears every instance within the horizon on both categories") {
  for (const std::string& name : {"bags", "tools_to_tray"}) {
    const CategoryConfig cfg = CategoryConfig::builtin(name);
    const auto instances = generate_instances(cfg, 3, 6, 7);
    Env env(cfg);
    for (const auto& inst : instances)
      for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const EpisodeResult ep = expert_episode(env, inst, seed);
        CHECK(ep.success);
        CHECK(ep.steps <= Env::kHorizon);
      }
  }
}

TEST_CASE("evaluate: expert ceiling, random floor, grasp-only partial credit") {
  const CategoryConfig cfg = CategoryConfig::builtin("bags");
  const auto instances = generate_instances(cfg, 3, 6, 7);
  Env env(cfg);
  ObsConfig obs;
  obs.frames = 1;

  SUBCASE("expert scores >= 0.99 on both splits") {
    const PolicyFn expert = [&env](const Observation&) {
      return scripted_expert(env.state(), env.category());
    };
    const EvalReport report = evaluate(expert, env, instances, 5, 3, obs);
    CHECK(report.seen_mean >= 0.99);
    CHECK(report.heldout_mean >= 0.99);
    CHECK(report.trials_per_instance == 5);
  }
  SUBCASE("a random policy scores near zero") {
    Rng rng(23);
    const PolicyFn random_policy = [&rng](const Observation&) {
      ActionVector a;
      a.dx = float(rng.uniform(-Env::kMaxStep, Env::kMaxStep));
      a.dy = float(rng.uniform(-Env::kMaxStep, Env::kMaxStep));
      a.gripper = float(rng.uniform());
      return a;
    };
    const EvalReport report = evaluate(random_policy, env, instances, 3, 5, obs);
    CHECK(report.seen_mean <= 0.25);
    CHECK(report.heldout_mean <= 0.25);
  }
  SUBCASE("grasp-without-place scores exactly 0.5") {
    const PolicyFn grasp_only = [&env](const Observation&) {
      if (env.state().grasped) {
        ActionVector hold;
        hold.gripper = 1.f;
        return hold;  // never moves to the goal
      }
      return scripted_expert(env.state(), env.category());
    };
    const EvalReport report = evaluate(grasp_only, env, instances, 3, 7, obs);
    CHECK(report.seen_mean == doctest::Approx(0.5));
    CHECK(report.heldout_mean == doctest::Approx(0.5));
  }
  SUBCASE("split hygiene is asserted at evaluation time") {
    std::vector<InstanceSpec> leaked = {instances[0]};
    for (auto& inst : leaked) inst.split = Split::train;
    std::vector<InstanceSpec> heldout_copy;
    for (const auto& inst : instances)
      if (inst.split == Split::heldout) heldout_copy.push_back(inst);
    heldout_copy.push_back(instances[0]);
    heldout_copy.back().split = Split::heldout;  // same params, marked heldout
    const PolicyFn stop = [](const Observation&) { return ActionVector{}; };
    CHECK_THROWS_AS(evaluate(stop, env, heldout_copy, 1, 1, obs, &leaked), Error);
  }
}

TEST_CASE("rendering: determinism, camera transform and depth field") {
  const CategoryConfig cfg = CategoryConfig::builtin("bags");
  const auto instances = generate_instances(cfg, 1, 0, 29);
  Env env(cfg);
  env.reset(instances[0], 9);

  SUBCASE("renders are a pure function of state") {
    const Image a = env.render("global");
    const Image b = env.render("global");
    CHECK(a.data == b.data);
    Env env2(cfg);
    env2.reset(instances[0], 9);
    const Image c = env2.render("global");
    CHECK(a.data == c.data);
  }
  SUBCASE("handle lands on its predicted pixel within 1 px") {
    const auto handle = env.handle_world();
    const auto px = env.world_to_pixel("global", handle[0], handle[1]);
    const Image img = env.render("global");
    const int r = int(std::lround(px[0])), c = int(std::lround(px[1]));
    REQUIRE(r >= 0);
    REQUIRE(r < 224);
    const auto& color = env.state().instance.color;
    CHECK(img.at(r, c, 0) == doctest::Approx(color[0] * 0.55f).epsilon(1e-4));
    CHECK(img.at(r, c, 1) == doctest::Approx(color[1] * 0.55f).epsilon(1e-4));
  }
  SUBCASE("world_to_pixel round-trips within a pixel") {
    const auto px = env.world_to_pixel("global", 0.25f, 0.7f);
    // invert: world = (col + 0.5) / size, 1 - (row + 0.5) / size
    const float wx = (px[1] + 0.5f) / 224.f;
    const float wy = 1.f - (px[0] + 0.5f) / 224.f;
    CHECK(wx == doctest::Approx(0.25f).epsilon(1e-5));
    CHECK(wy == doctest::Approx(0.7f).epsilon(1e-5));
  }
  SUBCASE("wrist view is centered on the gripper") {
    const auto px =
        env.world_to_pixel("wrist", env.state().gripper_x, env.state().gripper_y);
    CHECK(px[0] == doctest::Approx(111.5f).epsilon(1e-3));
    CHECK(px[1] == doctest::Approx(111.5f).epsilon(1e-3));
  }
  SUBCASE("depth is zero inside the object and positive far away") {
    const Image depth = env.render_depth("global");
    const auto center_px =
        env.world_to_pixel("global", env.state().obj_x, env.state().obj_y);
    CHECK(depth.at(int(center_px[0]), int(center_px[1]), 0) == 0.f);
    // the corner far from both object and gripper carries distance signal
    const float corner = depth.at(0, 223, 0);
    CHECK(corner > 0.05f);
  }
  SUBCASE("rgbd stacks depth as the fourth channel") {
    const Image rgbd = env.render_rgbd("global");
    const Image rgb = env.render("global");
    const Image depth = env.render_depth("global");
    CHECK(rgbd.c == 4);
    CHECK(rgbd.at(100, 100, 1) == rgb.at(100, 100, 1));
    CHECK(rgbd.at(100, 100, 3) == depth.at(100, 100, 0));
  }
}

TEST_CASE("full trajectory determinism under fixed (instance, seed, actions)") {
  const CategoryConfig cfg = CategoryConfig::builtin("tools_to_tray");
  const auto instances = generate_instances(cfg, 1, 0, 31);
  auto run = [&]() {
    Env env(cfg);
    env.reset(instances[0], 77);
    std::vector<float> trace;
    for (int t = 0; t < 30 && !env.state().done; ++t) {
      env.step(scripted_expert(env.state(), cfg));
      trace.push_back(env.state().gripper_x);
      trace.push_back(env.state().obj_y);
    }
    const Image img = env.render("wrist");
    trace.insert(trace.end(), img.data.begin(), img.data.begin() + 100);
    return trace;
  };
  CHECK(run() == run());
}
