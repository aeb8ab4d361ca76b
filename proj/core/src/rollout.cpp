// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/rollout.hpp"

#include "spawnnet/errors.hpp"
#include "spawnnet/rng.hpp"

namespace spawnnet {

ObsConfig obs_config_from(const PolicySpec& spec) {
  ObsConfig c;
  c.frames = spec.frames;
  c.views = spec.views;
  c.image_size = spec.encoder.image_size;
  return c;
}

EpisodeResult run_episode(Env& env, const InstanceSpec& instance, std::uint64_t seed,
                          const PolicyFn& policy, const ObsConfig& obs_cfg, bool record,
                          const ExpertFn* label_expert, const std::string& traj_id) {
  env.reset(instance, seed);

  EpisodeResult result;
  Trajectory& traj = result.traj;
  traj.id = traj_id;
  traj.task_id = env.category().name;
  traj.instance_id = instance.id;
  traj.instance = instance;
  traj.seed = seed;
  traj.views = obs_cfg.views;
  traj.source =
      label_expert ? Trajectory::Source::policy_rollout : Trajectory::Source::scripted_expert;

  std::vector<FrameBuffer> buffers(obs_cfg.views.size());
  bool done = false;
  int t = 0;
  while (!done) {
    Trajectory::Step step;
    for (std::size_t v = 0; v < obs_cfg.views.size(); ++v) {
      Image frame = env.render_rgbd(obs_cfg.views[v]);
      const std::string id = frame_id(traj_id, t, obs_cfg.views[v]);
      buffers[v].push(id, frame);
      step.frames.push_back(std::move(frame));
      step.frame_ids.push_back(id);
    }
    const Observation obs = assemble(buffers, obs_cfg.frames);
    const ActionVector executed = policy(obs);

    const EnvState& s = env.state();
    step.obj_x = s.obj_x;
    step.obj_y = s.obj_y;
    step.obj_rot = s.obj_rot;
    step.gripper_x = s.gripper_x;
    step.gripper_y = s.gripper_y;
    step.grasped = s.grasped;
    step.action = label_expert ? (*label_expert)(s) : executed;
    if (!record) step.frames.clear();
    traj.steps.push_back(std::move(step));

    done = env.step(executed).done;
    ++t;
  }
  if (label_expert) {
    // expert labels are recorded at every visited state, terminal included
    Trajectory::Step step;
    for (std::size_t v = 0; v < obs_cfg.views.size(); ++v) {
      Image frame = env.render_rgbd(obs_cfg.views[v]);
      step.frame_ids.push_back(frame_id(traj_id, t, obs_cfg.views[v]));
      step.frames.push_back(std::move(frame));
    }
    const EnvState& s = env.state();
    step.obj_x = s.obj_x;
    step.obj_y = s.obj_y;
    step.obj_rot = s.obj_rot;
    step.gripper_x = s.gripper_x;
    step.gripper_y = s.gripper_y;
    step.grasped = s.grasped;
    step.action = (*label_expert)(s);
    if (!record) step.frames.clear();
    traj.steps.push_back(std::move(step));
  }
  result.score = trial_score(env.state());
  result.success = env.state().succeeded;
  result.steps = t;
  result.final_state = env.state();
  return result;
}

EvalReport evaluate(const PolicyFn& policy, Env& env, const std::vector<InstanceSpec>& instances,
                    int trials_per_instance, std::uint64_t seed, const ObsConfig& obs_cfg,
                    const std::vector<InstanceSpec>* trained_on) {
  if (trials_per_instance < 1) throw InputError("evaluate: trials_per_instance must be >= 1");
  if (trained_on) {
    for (const InstanceSpec& inst : instances) {
      if (inst.split != Split::heldout) continue;
      for (const InstanceSpec& seen : *trained_on)
        if (instance_param_distance(inst, seen) < 1e-6f)
          throw Error("split hygiene violation: held-out instance " + inst.id +
                      " matches training instance " + seen.id);
    }
  }

  Rng root(splitmix64(seed ^ 0x6576616cull));
  EvalReport report;
  report.trials_per_instance = trials_per_instance;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const InstanceSpec& inst = instances[i];
    EvalReport::PerInstance row;
    row.instance_id = inst.id;
    row.split = inst.split;
    row.trials = trials_per_instance;
    double sum = 0;
    for (int trial = 0; trial < trials_per_instance; ++trial) {
      const std::uint64_t ep_seed = root.split(inst.id, std::uint64_t(trial)).next_u64();
      const std::string id = "eval_" + inst.id + "_t" + std::to_string(trial);
      sum += run_episode(env, inst, ep_seed, policy, obs_cfg, false, nullptr, id).score;
    }
    row.mean_score = sum / double(trials_per_instance);
    report.instances.push_back(row);
  }
  report.aggregate();
  return report;
}

std::vector<Trajectory> collect_demos(Env& env, const std::vector<InstanceSpec>& train_instances,
                                      int per_instance, std::uint64_t seed,
                                      const ObsConfig& obs_cfg, const std::string& id_prefix) {
  const int total = per_instance * int(train_instances.size());
  std::vector<Trajectory> demos(static_cast<std::size_t>(total));
  Rng root(splitmix64(seed ^ 0x64656d6full));
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k) seeds[std::size_t(k)] = root.next_u64();

#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < total; ++k) {
    const InstanceSpec& inst = train_instances[std::size_t(k) % train_instances.size()];
    Env local_env = env;  // independent copy per worker
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%05d", id_prefix.c_str(), k);
    const PolicyFn expert_policy = [&local_env](const Observation&) {
      return scripted_expert(local_env.state(), local_env.category());
    };
    demos[std::size_t(k)] =
        run_episode(local_env, inst, seeds[std::size_t(k)], expert_policy, obs_cfg, true, nullptr,
                    id)
            .traj;
  }
  return demos;
}

}  // namespace spawnnet
