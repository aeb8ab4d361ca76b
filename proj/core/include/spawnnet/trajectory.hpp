// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "spawnnet/bench.hpp"
#include "spawnnet/policy.hpp"

namespace spawnnet {

/// One demonstration or rollout. Per-step frames are stored once (RGB-D per
/// view); stacked Observations are reconstructed on demand.
struct Trajectory {
  enum class Source { scripted_expert, policy_rollout };

  struct Step {
    std::vector<Image> frames;           // one RGB-D image per view
    std::vector<std::string> frame_ids;  // stable per-frame ids (feature-cache keys)
    ActionVector action;
    // env-state metadata (never fed to policies; used by tooling)
    float obj_x = 0, obj_y = 0, obj_rot = 0;
    float gripper_x = 0, gripper_y = 0;
    bool grasped = false;
  };

  std::string id;
  std::string task_id;  // category name
  std::string instance_id;
  Source source = Source::scripted_expert;
  InstanceSpec instance;
  std::uint64_t seed = 0;
  std::vector<std::string> views;
  std::vector<Step> steps;

  int length() const { return int(steps.size()); }
};

/// Frame id of a stored frame: "<traj_id>.s%04d.<view>".
std::string frame_id(const std::string& traj_id, int step, const std::string& view);

/// Stacked observation ending at step `t` (repeat-first padding before the
/// episode start). `channels` = 3 strips the stored depth channel. `views`,
/// when given, selects a subset of the trajectory's views by name.
Observation observation_at(const Trajectory& traj, int t, int frames, int channels,
                           const std::vector<std::string>* views = nullptr);

// On-disk layout: one directory per trajectory under `root`:
//   <root>/<traj_id>/meta.json
//   <root>/<traj_id>/step_0000.<view>.png        8-bit RGB
//   <root>/<traj_id>/step_0000.<view>.depth.png  16-bit grayscale
void save_trajectory(const std::string& root, const Trajectory& traj);
Trajectory load_trajectory(const std::string& root, const std::string& traj_id);
std::vector<std::string> list_trajectories(const std::string& root);  // sorted ids

/// meta.json only; steps carry actions/ids/state metadata but no frames.
Trajectory load_trajectory_meta(const std::string& root, const std::string& traj_id);
/// One stored frame, decoded as RGB-D (c = 4).
Image load_step_frame(const std::string& root, const std::string& traj_id, int t,
                      const std::string& view);

}  // namespace spawnnet
