// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "spawnnet/errors.hpp"
#include "spawnnet/serialization.hpp"
#include "spawnnet/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace spawnnet {

std::string frame_id(const std::string& traj_id, int step, const std::string& view) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), ".s%04d.", step);
  return traj_id + buf + view;
}

Observation observation_at(const Trajectory& traj, int t, int frames, int channels,
                           const std::vector<std::string>* views) {
  if (t < 0 || t >= traj.length())
    throw InputError("observation_at: step " + std::to_string(t) + " out of range");
  std::vector<std::size_t> view_idx;
  if (views) {
    for (const std::string& name : *views) {
      const auto it = std::find(traj.views.begin(), traj.views.end(), name);
      if (it == traj.views.end())
        throw InputError("observation_at: trajectory " + traj.id + " has no view '" + name + "'");
      view_idx.push_back(std::size_t(it - traj.views.begin()));
    }
  } else {
    for (std::size_t v = 0; v < traj.views.size(); ++v) view_idx.push_back(v);
  }
  Observation obs;
  const std::size_t n_views = view_idx.size();
  obs.frames.resize(n_views);
  obs.ids.resize(n_views);
  for (std::size_t vi = 0; vi < n_views; ++vi) {
    const std::size_t v = view_idx[vi];
    for (int f = frames - 1; f >= 0; --f) {
      const int src = std::max(0, t - f);  // oldest first, repeat-first padding
      const Image& full = traj.steps[std::size_t(src)].frames.at(v);
      if (channels == full.c) {
        obs.frames[vi].push_back(full);
      } else {
        Image img(full.h, full.w, channels);
        for (int y = 0; y < full.h; ++y)
          for (int x = 0; x < full.w; ++x)
            for (int c = 0; c < channels; ++c) img.at(y, x, c) = full.at(y, x, c);
        obs.frames[vi].push_back(std::move(img));
      }
      obs.ids[vi].push_back(traj.steps[std::size_t(src)].frame_ids.at(v));
    }
  }
  return obs;
}

namespace {

std::string step_basename(int t, const std::string& view) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%04d.", t);
  return buf + view;
}

}  // namespace

void save_trajectory(const std::string& root, const Trajectory& traj) {
  if (traj.steps.empty()) throw InputError("save_trajectory: empty trajectory");
  const fs::path dir = fs::path(root) / traj.id;
  fs::create_directories(dir);

  json meta;
  meta["id"] = traj.id;
  meta["task"] = traj.task_id;
  meta["instance_id"] = traj.instance_id;
  meta["instance"] = traj.instance;
  meta["seed"] = traj.seed;
  meta["source"] =
      traj.source == Trajectory::Source::scripted_expert ? "scripted_expert" : "policy_rollout";
  meta["views"] = traj.views;
  meta["frame_count"] = traj.length();
  json actions = json::array();
  json states = json::array();
  for (const auto& step : traj.steps) {
    actions.push_back(step.action);
    states.push_back({{"obj_x", step.obj_x},
                      {"obj_y", step.obj_y},
                      {"obj_rot", step.obj_rot},
                      {"gripper_x", step.gripper_x},
                      {"gripper_y", step.gripper_y},
                      {"grasped", step.grasped}});
  }
  meta["actions"] = actions;
  meta["states"] = states;

  for (int t = 0; t < traj.length(); ++t) {
    const auto& step = traj.steps[std::size_t(t)];
    if (step.frames.size() != traj.views.size())
      throw InputError("save_trajectory: step " + std::to_string(t) + " missing frames");
    for (std::size_t v = 0; v < traj.views.size(); ++v) {
      const Image& rgbd = step.frames[v];
      Image rgb(rgbd.h, rgbd.w, 3), depth(rgbd.h, rgbd.w, 1);
      for (int y = 0; y < rgbd.h; ++y)
        for (int x = 0; x < rgbd.w; ++x) {
          rgb.at(y, x, 0) = rgbd.at(y, x, 0);
          rgb.at(y, x, 1) = rgbd.at(y, x, 1);
          rgb.at(y, x, 2) = rgbd.at(y, x, 2);
          depth.at(y, x, 0) = rgbd.c == 4 ? rgbd.at(y, x, 3) : 0.f;
        }
      write_png((dir / (step_basename(t, traj.views[v]) + ".png")).string(), rgb);
      write_png16((dir / (step_basename(t, traj.views[v]) + ".depth.png")).string(), depth);
    }
  }

  const fs::path tmp = dir / "meta.json.tmp";
  {
    std::ofstream f(tmp);
    f << meta.dump(1) << "\n";
  }
  fs::rename(tmp, dir / "meta.json");
}

Trajectory load_trajectory_meta(const std::string& root, const std::string& traj_id) {
  const fs::path dir = fs::path(root) / traj_id;
  std::ifstream f(dir / "meta.json");
  if (!f) throw LookupError("load_trajectory: no meta.json in " + dir.string());
  json meta = json::parse(f);

  Trajectory traj;
  traj.id = meta.at("id").get<std::string>();
  traj.task_id = meta.at("task").get<std::string>();
  traj.instance_id = meta.at("instance_id").get<std::string>();
  traj.instance = meta.at("instance").get<InstanceSpec>();
  traj.seed = meta.at("seed").get<std::uint64_t>();
  traj.source = meta.at("source").get<std::string>() == "policy_rollout"
                    ? Trajectory::Source::policy_rollout
                    : Trajectory::Source::scripted_expert;
  traj.views = meta.at("views").get<std::vector<std::string>>();
  const int frame_count = meta.at("frame_count").get<int>();
  const json& actions = meta.at("actions");
  const json& states = meta.at("states");

  for (int t = 0; t < frame_count; ++t) {
    Trajectory::Step step;
    for (const std::string& view : traj.views)
      step.frame_ids.push_back(frame_id(traj_id, t, view));
    step.action = actions.at(std::size_t(t)).get<ActionVector>();
    const json& st = states.at(std::size_t(t));
    step.obj_x = st.at("obj_x").get<float>();
    step.obj_y = st.at("obj_y").get<float>();
    step.obj_rot = st.at("obj_rot").get<float>();
    step.gripper_x = st.at("gripper_x").get<float>();
    step.gripper_y = st.at("gripper_y").get<float>();
    step.grasped = st.at("grasped").get<bool>();
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

Image load_step_frame(const std::string& root, const std::string& traj_id, int t,
                      const std::string& view) {
  const fs::path dir = fs::path(root) / traj_id;
  const Image rgb = read_png((dir / (step_basename(t, view) + ".png")).string());
  const Image depth = read_png((dir / (step_basename(t, view) + ".depth.png")).string());
  Image rgbd(rgb.h, rgb.w, 4);
  for (int y = 0; y < rgb.h; ++y)
    for (int x = 0; x < rgb.w; ++x) {
      rgbd.at(y, x, 0) = rgb.at(y, x, 0);
      rgbd.at(y, x, 1) = rgb.at(y, x, 1);
      rgbd.at(y, x, 2) = rgb.at(y, x, 2);
      rgbd.at(y, x, 3) = depth.at(y, x, 0);
    }
  return rgbd;
}

Trajectory load_trajectory(const std::string& root, const std::string& traj_id) {
  Trajectory traj = load_trajectory_meta(root, traj_id);
  for (int t = 0; t < traj.length(); ++t)
    for (const std::string& view : traj.views)
      traj.steps[std::size_t(t)].frames.push_back(load_step_frame(root, traj_id, t, view));
  return traj;
}

std::vector<std::string> list_trajectories(const std::string& root) {
  std::vector<std::string> ids;
  if (!fs::exists(root)) return ids;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json"))
      ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace spawnnet
