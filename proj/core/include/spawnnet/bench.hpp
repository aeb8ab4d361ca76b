// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale categorical benchmark: a procedurally generated 2D kinematic
// pick-and-place world with per-category instance variation, disjoint
// train/held-out splits, two rendered camera views (global and a
// gripper-centered zoom), a depth channel, and an analytic scripted expert.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spawnnet/errors.hpp"
#include "spawnnet/image.hpp"
#include "spawnnet/policy.hpp"

namespace spawnnet {

enum class Split { train, heldout };
std::string to_string(Split s);

struct Rect {
  float x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool contains(float x, float y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  float cx() const { return 0.5f * (x0 + x1); }
  float cy() const { return 0.5f * (y0 + y1); }
};

struct PoseRange {
  float x_min = 0.1f, x_max = 0.4f;
  float y_min = 0.25f, y_max = 0.75f;
  float rot_min = -0.7854f, rot_max = 0.7854f;  // radians
};

/// One concrete object instance of a category.
struct InstanceSpec {
  std::string id;
  std::string category;
  struct ShapeParams {
    int vertices = 6;
    float scale = 0.09f;        // mean radius, world units
    float aspect = 1.0f;        // x stretch / y squeeze
    float irregularity = 0.3f;  // radial jitter fraction
    float handle_angle = 0.f;   // where the handle stub points (radians, local)
    float handle_ext = 0.3f;    // stub length as a fraction of scale
    std::uint64_t noise_seed = 0;  // fixes the per-vertex jitter
  } shape;
  std::array<float, 3> color = {0.5f, 0.3f, 0.3f};
  PoseRange pose_range;
  Split split = Split::train;
};

/// Declarative per-category generation ranges and task geometry.
struct CategoryConfig {
  std::string name = "bags";
  int stages = 2;  // 2: grasp + deliver, 3: grasp + move + release inside
  int min_vertices = 6, max_vertices = 9;
  float scale_min = 0.07f, scale_max = 0.11f;
  float aspect_min = 0.75f, aspect_max = 1.35f;
  float irregularity_min = 0.15f, irregularity_max = 0.4f;
  float handle_ext_min = 0.25f, handle_ext_max = 0.45f;
  std::array<float, 3> color_min = {0.15f, 0.1f, 0.1f};
  std::array<float, 3> color_max = {0.9f, 0.8f, 0.8f};
  PoseRange pose;
  Rect goal = {0.74f, 0.35f, 0.96f, 0.65f};
  /// Minimum normalized (shape, color) parameter distance between any
  /// held-out instance and every training instance.
  float min_param_distance = 0.18f;

  static CategoryConfig builtin(const std::string& name);  // "bags" | "tools_to_tray"
};

/// Deterministic under `seed`; held-out (shape, color) tuples keep at least
/// min_param_distance from every training instance. Throws GenerationError
/// when the ranges cannot produce a disjoint split.
std::vector<InstanceSpec> generate_instances(const CategoryConfig& cfg, int n_train,
                                             int n_heldout, std::uint64_t seed);

/// Normalized parameter-space distance used for split hygiene.
float instance_param_distance(const InstanceSpec& a, const InstanceSpec& b);

/// Local-frame polygon derived from the shape parameters (deterministic).
std::vector<std::array<float, 2>> instance_polygon(const InstanceSpec::ShapeParams& shape);

struct StageFlags {
  bool grasped = false;       // currently holding the object
  bool ever_grasped = false;  // stage-1 credit
  bool delivered = false;     // full success
};

struct EnvState {
  float gripper_x = 0.5f, gripper_y = 0.88f;
  float obj_x = 0.25f, obj_y = 0.5f, obj_rot = 0.f;
  bool grasped = false;
  bool ever_grasped = false;
  bool succeeded = false;
  bool done = false;
  int step_count = 0;
  float grab_dx = 0.f, grab_dy = 0.f;  // object offset while held
  InstanceSpec instance;
};

/// Kinematic 2D environment. World is the unit square, y up. Motions are
/// clamped deltas; a grasp succeeds iff the gripper is within grasp_radius
/// of the instance's handle point when closing.
class Env {
 public:
  explicit Env(CategoryConfig cfg);

  static constexpr float kMaxStep = 0.05f;
  static constexpr float kGraspRadius = 0.05f;
  static constexpr int kHorizon = 70;
  static constexpr int kImageSize = 224;
  static constexpr float kWristExtent = 0.36f;

  const EnvState& reset(const InstanceSpec& instance, std::uint64_t seed);

  struct StepResult {
    bool done = false;
    StageFlags flags;
  };
  /// Throws StateError when called after done.
  StepResult step(const ActionVector& action);

  /// views: "global" | "wrist". Flat-shaded, no anti-aliasing.
  Image render(const std::string& view) const;
  /// Normalized distance field to the scene geometry (object + gripper).
  Image render_depth(const std::string& view) const;
  /// RGB plus depth as a 4th channel.
  Image render_rgbd(const std::string& view) const;

  /// Pixel (row, col) of a world point under a view's camera.
  std::array<float, 2> world_to_pixel(const std::string& view, float wx, float wy) const;

  std::array<float, 2> handle_world() const;
  const EnvState& state() const { return state_; }
  const CategoryConfig& category() const { return cfg_; }

 private:
  struct Camera {
    float x0, y0, extent;
  };
  Camera camera(const std::string& view) const;

  CategoryConfig cfg_;
  EnvState state_;
  std::vector<std::array<float, 2>> polygon_;  // local frame
};

/// Handle point in world coordinates for an instance at a given pose.
std::array<float, 2> handle_world_of(const InstanceSpec& instance, float obj_x, float obj_y,
                                     float obj_rot);

/// Pixel (row, col) of a world point under the fixed global camera.
std::array<float, 2> global_world_to_pixel(float wx, float wy);

/// Analytic expert: proportional motion to the handle, grasp, carry to the
/// goal, release. Bounded actions; also defined on terminal states.
ActionVector scripted_expert(const EnvState& state, const CategoryConfig& cfg);

/// Per-trial partial credit: 1.0 full success, 0.5 grasp only, 0 otherwise.
double trial_score(const EnvState& final_state);

struct EvalReport {
  struct PerInstance {
    std::string instance_id;
    Split split = Split::train;
    int trials = 0;
    double mean_score = 0;
  };
  std::vector<PerInstance> instances;
  double seen_mean = 0, seen_stderr = 0;
  double heldout_mean = 0, heldout_stderr = 0;
  int trials_per_instance = 0;

  /// Recomputes the split aggregates from the per-instance rows.
  void aggregate();
};

}  // namespace spawnnet
