// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spawnnet/bench.hpp"
#include "spawnnet/trajectory.hpp"

namespace spawnnet {

struct ObsConfig {
  int frames = 4;
  std::vector<std::string> views = {"global"};
  int image_size = Env::kImageSize;
};

ObsConfig obs_config_from(const PolicySpec& spec);

using PolicyFn = std::function<ActionVector(const Observation&)>;
using ExpertFn = std::function<ActionVector(const EnvState&)>;

struct EpisodeResult {
  Trajectory traj;  // frames populated only when `record` is set
  double score = 0;
  bool success = false;
  int steps = 0;
  EnvState final_state;
};

/// Rolls one episode. Frames are always rendered RGB-D; policies that want
/// RGB only slice the depth channel off downstream. When `label_expert` is
/// given, recorded step actions are the expert's labels on the visited
/// states (the policy still drives the rollout).
EpisodeResult run_episode(Env& env, const InstanceSpec& instance, std::uint64_t seed,
                          const PolicyFn& policy, const ObsConfig& obs_cfg, bool record,
                          const ExpertFn* label_expert = nullptr,
                          const std::string& traj_id = "episode");

/// Partial-credit evaluation: `trials_per_instance` seeded rollouts per
/// instance, per-instance mean scores, split aggregates with standard error
/// across instances. When `trained_on` is given, held-out instances are
/// checked for (shape, color) disjointness against it (split hygiene).
EvalReport evaluate(const PolicyFn& policy, Env& env, const std::vector<InstanceSpec>& instances,
                    int trials_per_instance, std::uint64_t seed, const ObsConfig& obs_cfg,
                    const std::vector<InstanceSpec>* trained_on = nullptr);

/// Scripted-expert demonstrations over the training instances.
std::vector<Trajectory> collect_demos(Env& env, const std::vector<InstanceSpec>& train_instances,
                                      int per_instance, std::uint64_t seed,
                                      const ObsConfig& obs_cfg, const std::string& id_prefix);

}  // namespace spawnnet
