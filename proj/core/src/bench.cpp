// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/bench.hpp"

#include <algorithm>
#include <cmath>

#include "spawnnet/errors.hpp"
#include "spawnnet/rng.hpp"

namespace spawnnet {

namespace {

constexpr float kPi = 3.14159265358979323846f;
constexpr float kHandleRadius = 0.014f;   // drawn handle disk
constexpr float kGripperBar = 0.012f;     // half-size of one gripper bar
constexpr float kGripperGapOpen = 0.034f;
constexpr float kGripperGapClosed = 0.012f;

float dist2(float ax, float ay, float bx, float by) {
  const float dx = ax - bx, dy = ay - by;
  return dx * dx + dy * dy;
}

float point_segment_dist(float px, float py, float ax, float ay, float bx, float by) {
  const float abx = bx - ax, aby = by - ay;
  const float len2 = abx * abx + aby * aby;
  float t = len2 > 0 ? ((px - ax) * abx + (py - ay) * aby) / len2 : 0.f;
  t = std::clamp(t, 0.f, 1.f);
  return std::sqrt(dist2(px, py, ax + t * abx, ay + t * aby));
}

bool point_in_polygon(float px, float py, const std::vector<std::array<float, 2>>& poly) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a[1] > py) != (b[1] > py) &&
        px < (b[0] - a[0]) * (py - a[1]) / (b[1] - a[1]) + a[0])
      inside = !inside;
  }
  return inside;
}

float polygon_boundary_dist(float px, float py, const std::vector<std::array<float, 2>>& poly) {
  float best = 1e9f;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    best = std::min(best, point_segment_dist(px, py, poly[j][0], poly[j][1], poly[i][0], poly[i][1]));
  return best;
}

}  // namespace

std::string to_string(Split s) { return s == Split::train ? "train" : "heldout"; }

CategoryConfig CategoryConfig::builtin(const std::string& name) {
  CategoryConfig c;
  if (name == "bags") {
    c.name = "bags";
    c.stages = 2;
    c.min_vertices = 6;
    c.max_vertices = 9;
    c.scale_min = 0.07f;
    c.scale_max = 0.11f;
    c.aspect_min = 0.75f;
    c.aspect_max = 1.35f;
    c.pose = {0.1f, 0.4f, 0.25f, 0.75f, -0.7854f, 0.7854f};
    c.goal = {0.74f, 0.35f, 0.96f, 0.65f};
  } else if (name == "tools_to_tray") {
    c.name = "tools_to_tray";
    c.stages = 3;
    c.min_vertices = 4;
    c.max_vertices = 6;
    c.scale_min = 0.06f;
    c.scale_max = 0.09f;
    c.aspect_min = 1.6f;
    c.aspect_max = 2.2f;
    c.pose = {0.1f, 0.45f, 0.45f, 0.85f, -0.7854f, 0.7854f};
    c.goal = {0.68f, 0.08f, 0.95f, 0.3f};
  } else {
    throw ConfigError("unknown benchmark category: " + name);
  }
  return c;
}

std::vector<std::array<float, 2>> instance_polygon(const InstanceSpec::ShapeParams& shape) {
  Rng rng(splitmix64(shape.noise_seed ^ 0x706f6c79ull));
  std::vector<std::array<float, 2>> poly;
  for (int k = 0; k < shape.vertices; ++k) {
    const float theta = 2.f * kPi * float(k) / float(shape.vertices);
    const float jitter = float(rng.uniform(-0.5, 0.5)) * shape.irregularity;
    const float r = shape.scale * (1.f + jitter);
    poly.push_back({r * std::cos(theta) * shape.aspect, r * std::sin(theta) / shape.aspect});
  }
  return poly;
}

float instance_param_distance(const InstanceSpec& a, const InstanceSpec& b) {
  const auto& s = a.shape;
  const auto& t = b.shape;
  float d = 0;
  d += std::abs(float(s.vertices - t.vertices)) / 6.f;
  d += std::abs(s.scale - t.scale) / 0.05f;
  d += std::abs(s.aspect - t.aspect) / 0.8f;
  d += std::abs(s.irregularity - t.irregularity) / 0.4f;
  d += std::abs(s.handle_angle - t.handle_angle) / kPi;
  d += std::abs(s.handle_ext - t.handle_ext) / 0.3f;
  for (int i = 0; i < 3; ++i) d += std::abs(a.color[std::size_t(i)] - b.color[std::size_t(i)]);
  return d / 10.f;
}

std::vector<InstanceSpec> generate_instances(const CategoryConfig& cfg, int n_train,
                                             int n_heldout, std::uint64_t seed) {
  if (cfg.min_vertices > cfg.max_vertices || cfg.scale_min > cfg.scale_max ||
      cfg.aspect_min > cfg.aspect_max)
    throw GenerationError("generate_instances: degenerate parameter ranges");
  Rng rng(splitmix64(seed ^ fnv1a64(cfg.name)));

  auto sample = [&rng, &cfg](Split split, int index) {
    InstanceSpec inst;
    inst.category = cfg.name;
    inst.split = split;
    inst.id = cfg.name + "_" + to_string(split) + "_" + std::to_string(index);
    inst.shape.vertices = int(rng.uniform_int(cfg.min_vertices, cfg.max_vertices));
    inst.shape.scale = float(rng.uniform(cfg.scale_min, cfg.scale_max));
    inst.shape.aspect = float(rng.uniform(cfg.aspect_min, cfg.aspect_max));
    inst.shape.irregularity = float(rng.uniform(cfg.irregularity_min, cfg.irregularity_max));
    inst.shape.handle_angle = float(rng.uniform(0.0, 2.0 * kPi));
    inst.shape.handle_ext = float(rng.uniform(cfg.handle_ext_min, cfg.handle_ext_max));
    inst.shape.noise_seed = rng.next_u64();
    for (int c = 0; c < 3; ++c)
      inst.color[std::size_t(c)] =
          float(rng.uniform(cfg.color_min[std::size_t(c)], cfg.color_max[std::size_t(c)]));
    inst.pose_range = cfg.pose;
    return inst;
  };

  std::vector<InstanceSpec> all;
  for (int i = 0; i < n_train; ++i) all.push_back(sample(Split::train, i));

  constexpr int kMaxAttempts = 200;
  for (int i = 0; i < n_heldout; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      InstanceSpec cand = sample(Split::heldout, i);
      bool ok = true;
      for (const auto& inst : all)
        if (inst.split == Split::train &&
            instance_param_distance(cand, inst) < cfg.min_param_distance) {
          ok = false;
          break;
        }
      if (ok) {
        all.push_back(std::move(cand));
        placed = true;
      }
    }
    if (!placed)
      throw GenerationError(
          "generate_instances: ranges too narrow to produce a disjoint held-out split");
  }
  return all;
}

// ---------------------------------------------------------------------------

Env::Env(CategoryConfig cfg) : cfg_(std::move(cfg)) {}

const EnvState& Env::reset(const InstanceSpec& instance, std::uint64_t seed) {
  Rng rng(splitmix64(seed ^ fnv1a64(instance.id) ^ 0x72657365u));
  state_ = EnvState{};
  state_.instance = instance;
  polygon_ = instance_polygon(instance.shape);
  const PoseRange& pr = instance.pose_range;
  // Resample until the handle is reachable inside the world and the object
  // does not spawn inside the goal region.
  for (int attempt = 0; attempt < 200; ++attempt) {
    state_.obj_x = float(rng.uniform(pr.x_min, pr.x_max));
    state_.obj_y = float(rng.uniform(pr.y_min, pr.y_max));
    state_.obj_rot = float(rng.uniform(pr.rot_min, pr.rot_max));
    const auto h = handle_world();
    const bool handle_ok = h[0] > 0.05f && h[0] < 0.95f && h[1] > 0.05f && h[1] < 0.95f;
    if (handle_ok && !cfg_.goal.contains(state_.obj_x, state_.obj_y)) break;
  }
  state_.gripper_x = 0.52f + float(rng.uniform(-0.04, 0.04));
  state_.gripper_y = 0.88f + float(rng.uniform(-0.03, 0.03));
  return state_;
}

std::array<float, 2> handle_world_of(const InstanceSpec& instance, float obj_x, float obj_y,
                                     float obj_rot) {
  const auto& s = instance.shape;
  // handle stub sits on the shape boundary direction handle_angle, extended
  const float r = s.scale * (1.f + s.handle_ext);
  const float lx = r * std::cos(s.handle_angle) * s.aspect;
  const float ly = r * std::sin(s.handle_angle) / s.aspect;
  const float c = std::cos(obj_rot), sn = std::sin(obj_rot);
  return {obj_x + c * lx - sn * ly, obj_y + sn * lx + c * ly};
}

std::array<float, 2> global_world_to_pixel(float wx, float wy) {
  const float col = wx * Env::kImageSize - 0.5f;
  const float row = (1.f - wy) * Env::kImageSize - 0.5f;
  return {row, col};
}

std::array<float, 2> Env::handle_world() const {
  return handle_world_of(state_.instance, state_.obj_x, state_.obj_y, state_.obj_rot);
}

Env::StepResult Env::step(const ActionVector& action) {
  if (state_.done) throw StateError("env: step() called after the episode is done");
  state_.step_count++;

  const float dx = std::clamp(action.dx, -kMaxStep, kMaxStep);
  const float dy = std::clamp(action.dy, -kMaxStep, kMaxStep);
  state_.gripper_x = std::clamp(state_.gripper_x + dx, 0.f, 1.f);
  state_.gripper_y = std::clamp(state_.gripper_y + dy, 0.f, 1.f);

  const bool want_close = action.gripper > 0.5f;
  if (!state_.grasped && want_close) {
    const auto h = handle_world();
    if (dist2(state_.gripper_x, state_.gripper_y, h[0], h[1]) <= kGraspRadius * kGraspRadius) {
      state_.grasped = true;
      state_.ever_grasped = true;
      state_.grab_dx = state_.obj_x - state_.gripper_x;
      state_.grab_dy = state_.obj_y - state_.gripper_y;
    }
  } else if (state_.grasped && !want_close) {
    state_.grasped = false;
  }
  if (state_.grasped) {
    state_.obj_x = state_.gripper_x + state_.grab_dx;
    state_.obj_y = state_.gripper_y + state_.grab_dy;
  }

  const bool in_goal = cfg_.goal.contains(state_.obj_x, state_.obj_y);
  if (cfg_.stages <= 2) {
    if (in_goal && state_.ever_grasped) state_.succeeded = true;
  } else {
    if (in_goal && state_.ever_grasped && !state_.grasped) state_.succeeded = true;
  }

  state_.done = state_.succeeded || state_.step_count >= kHorizon;
  StepResult r;
  r.done = state_.done;
  r.flags.grasped = state_.grasped;
  r.flags.ever_grasped = state_.ever_grasped;
  r.flags.delivered = state_.succeeded;
  return r;
}

Env::Camera Env::camera(const std::string& view) const {
  if (view == "global") return {0.f, 0.f, 1.f};
  if (view == "wrist")
    return {state_.gripper_x - kWristExtent / 2, state_.gripper_y - kWristExtent / 2, kWristExtent};
  throw ConfigError("unknown view: " + view);
}

std::array<float, 2> Env::world_to_pixel(const std::string& view, float wx, float wy) const {
  const Camera cam = camera(view);
  const float col = (wx - cam.x0) / cam.extent * kImageSize - 0.5f;
  const float row = (1.f - (wy - cam.y0) / cam.extent) * kImageSize - 0.5f;
  return {row, col};
}

Image Env::render(const std::string& view) const {
  const Camera cam = camera(view);
  Image img(kImageSize, kImageSize, 3);

  // world-frame polygon
  std::vector<std::array<float, 2>> poly(polygon_.size());
  const float c = std::cos(state_.obj_rot), sn = std::sin(state_.obj_rot);
  for (std::size_t i = 0; i < polygon_.size(); ++i) {
    poly[i] = {state_.obj_x + c * polygon_[i][0] - sn * polygon_[i][1],
               state_.obj_y + sn * polygon_[i][0] + c * polygon_[i][1]};
  }
  const auto handle = handle_world();
  const auto& color = state_.instance.color;
  const float gap = state_.grasped ? kGripperGapClosed : kGripperGapOpen;

  for (int r = 0; r < kImageSize; ++r) {
    const float wy = cam.y0 + (1.f - (float(r) + 0.5f) / kImageSize) * cam.extent;
    for (int px = 0; px < kImageSize; ++px) {
      const float wx = cam.x0 + (float(px) + 0.5f) / kImageSize * cam.extent;
      float rr = 0.82f, gg = 0.82f, bb = 0.84f;  // background
      if (cfg_.goal.contains(wx, wy)) {
        rr = 0.62f;
        gg = 0.78f;
        bb = 0.62f;
      }
      if (point_in_polygon(wx, wy, poly)) {
        rr = color[0];
        gg = color[1];
        bb = color[2];
      }
      if (dist2(wx, wy, handle[0], handle[1]) <= kHandleRadius * kHandleRadius) {
        rr = color[0] * 0.55f;
        gg = color[1] * 0.55f;
        bb = color[2] * 0.55f;
      }
      // gripper: two vertical bars, closing narrows the gap
      const float gx = state_.gripper_x, gy = state_.gripper_y;
      const bool in_left = std::abs(wx - (gx - gap)) <= kGripperBar && std::abs(wy - gy) <= 2.4f * kGripperBar;
      const bool in_right = std::abs(wx - (gx + gap)) <= kGripperBar && std::abs(wy - gy) <= 2.4f * kGripperBar;
      const bool in_bridge = std::abs(wy - gy - 2.0f * kGripperBar) <= 0.6f * kGripperBar && std::abs(wx - gx) <= gap;
      if (in_left || in_right || in_bridge) {
        rr = 0.12f;
        gg = 0.12f;
        bb = 0.14f;
      }
      img.at(r, px, 0) = rr;
      img.at(r, px, 1) = gg;
      img.at(r, px, 2) = bb;
    }
  }
  return img;
}

Image Env::render_depth(const std::string& view) const {
  const Camera cam = camera(view);
  Image img(kImageSize, kImageSize, 1);

  std::vector<std::array<float, 2>> poly(polygon_.size());
  const float c = std::cos(state_.obj_rot), sn = std::sin(state_.obj_rot);
  for (std::size_t i = 0; i < polygon_.size(); ++i) {
    poly[i] = {state_.obj_x + c * polygon_[i][0] - sn * polygon_[i][1],
               state_.obj_y + sn * polygon_[i][0] + c * polygon_[i][1]};
  }
  const float gx = state_.gripper_x, gy = state_.gripper_y;
  for (int r = 0; r < kImageSize; ++r) {
    const float wy = cam.y0 + (1.f - (float(r) + 0.5f) / kImageSize) * cam.extent;
    for (int px = 0; px < kImageSize; ++px) {
      const float wx = cam.x0 + (float(px) + 0.5f) / kImageSize * cam.extent;
      float d = point_in_polygon(wx, wy, poly) ? 0.f : polygon_boundary_dist(wx, wy, poly);
      d = std::min(d, std::sqrt(dist2(wx, wy, gx, gy)));
      img.at(r, px, 0) = std::clamp(d / cam.extent, 0.f, 1.f);
    }
  }
  return img;
}

Image Env::render_rgbd(const std::string& view) const {
  const Image rgb = render(view);
  const Image depth = render_depth(view);
  Image out(kImageSize, kImageSize, 4);
  for (int y = 0; y < kImageSize; ++y)
    for (int x = 0; x < kImageSize; ++x) {
      out.at(y, x, 0) = rgb.at(y, x, 0);
      out.at(y, x, 1) = rgb.at(y, x, 1);
      out.at(y, x, 2) = rgb.at(y, x, 2);
      out.at(y, x, 3) = depth.at(y, x, 0);
    }
  return out;
}

ActionVector scripted_expert(const EnvState& state, const CategoryConfig& cfg) {
  ActionVector a;
  a.gripper = 0.f;
  if (state.succeeded) return a;

  auto move_toward = [&a, &state](float tx, float ty) {
    const float ddx = tx - state.gripper_x, ddy = ty - state.gripper_y;
    const float d = std::sqrt(ddx * ddx + ddy * ddy);
    if (d < 1e-6f) {
      a.dx = a.dy = 0.f;
      return;
    }
    const float s = std::min(d, Env::kMaxStep) / d;  // exact landing, no overshoot
    a.dx = ddx * s;
    a.dy = ddy * s;
  };

  if (!state.grasped) {
    const auto h = handle_world_of(state.instance, state.obj_x, state.obj_y, state.obj_rot);
    const float hx = h[0], hy = h[1];
    const float d = std::sqrt(dist2(state.gripper_x, state.gripper_y, hx, hy));
    if (d > Env::kGraspRadius * 0.6f) {
      move_toward(hx, hy);
      a.gripper = 0.f;
    } else {
      a.dx = a.dy = 0.f;
      a.gripper = 1.f;
    }
  } else {
    const float tx = cfg.goal.cx() - state.grab_dx;
    const float ty = cfg.goal.cy() - state.grab_dy;
    const bool obj_in_goal = cfg.goal.contains(state.obj_x, state.obj_y);
    if (cfg.stages >= 3 && obj_in_goal) {
      a.dx = a.dy = 0.f;
      a.gripper = 0.f;  // release inside the tray
    } else {
      move_toward(tx, ty);
      a.gripper = 1.f;
    }
  }
  return a;
}

double trial_score(const EnvState& final_state) {
  if (final_state.succeeded) return 1.0;
  if (final_state.ever_grasped) return 0.5;
  return 0.0;
}

void EvalReport::aggregate() {
  auto agg = [this](Split split, double& mean, double& stderr_out) {
    std::vector<double> vals;
    for (const auto& pi : instances)
      if (pi.split == split) vals.push_back(pi.mean_score);
    if (vals.empty()) {
      mean = 0;
      stderr_out = 0;
      return;
    }
    double m = 0;
    for (double v : vals) m += v;
    m /= double(vals.size());
    double var = 0;
    for (double v : vals) var += (v - m) * (v - m);
    mean = m;
    stderr_out = vals.size() > 1 ? std::sqrt(var / double(vals.size() - 1)) /
                                       std::sqrt(double(vals.size()))
                                 : 0.0;
  };
  agg(Split::train, seen_mean, seen_stderr);
  agg(Split::heldout, heldout_mean, heldout_stderr);
}

}  // namespace spawnnet
