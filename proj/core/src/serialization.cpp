// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/serialization.hpp"

namespace spawnnet {

using nlohmann::json;

void to_json(json& j, const Rect& r) { j = {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}}; }
void from_json(const json& j, Rect& r) {
  j.at("x0").get_to(r.x0);
  j.at("y0").get_to(r.y0);
  j.at("x1").get_to(r.x1);
  j.at("y1").get_to(r.y1);
}

void to_json(json& j, const PoseRange& p) {
  j = {{"x_min", p.x_min}, {"x_max", p.x_max}, {"y_min", p.y_min},
       {"y_max", p.y_max}, {"rot_min", p.rot_min}, {"rot_max", p.rot_max}};
}
void from_json(const json& j, PoseRange& p) {
  j.at("x_min").get_to(p.x_min);
  j.at("x_max").get_to(p.x_max);
  j.at("y_min").get_to(p.y_min);
  j.at("y_max").get_to(p.y_max);
  j.at("rot_min").get_to(p.rot_min);
  j.at("rot_max").get_to(p.rot_max);
}

void to_json(json& j, const InstanceSpec& s) {
  j = {{"id", s.id},
       {"category", s.category},
       {"split", to_string(s.split)},
       {"color", s.color},
       {"pose_range", s.pose_range},
       {"shape",
        {{"vertices", s.shape.vertices},
         {"scale", s.shape.scale},
         {"aspect", s.shape.aspect},
         {"irregularity", s.shape.irregularity},
         {"handle_angle", s.shape.handle_angle},
         {"handle_ext", s.shape.handle_ext},
         {"noise_seed", s.shape.noise_seed}}}};
}
void from_json(const json& j, InstanceSpec& s) {
  j.at("id").get_to(s.id);
  j.at("category").get_to(s.category);
  s.split = j.at("split").get<std::string>() == "heldout" ? Split::heldout : Split::train;
  j.at("color").get_to(s.color);
  j.at("pose_range").get_to(s.pose_range);
  const json& sh = j.at("shape");
  sh.at("vertices").get_to(s.shape.vertices);
  sh.at("scale").get_to(s.shape.scale);
  sh.at("aspect").get_to(s.shape.aspect);
  sh.at("irregularity").get_to(s.shape.irregularity);
  sh.at("handle_angle").get_to(s.shape.handle_angle);
  sh.at("handle_ext").get_to(s.shape.handle_ext);
  sh.at("noise_seed").get_to(s.shape.noise_seed);
}

void to_json(json& j, const CategoryConfig& c) {
  j = {{"name", c.name},
       {"stages", c.stages},
       {"min_vertices", c.min_vertices},
       {"max_vertices", c.max_vertices},
       {"scale_min", c.scale_min},
       {"scale_max", c.scale_max},
       {"aspect_min", c.aspect_min},
       {"aspect_max", c.aspect_max},
       {"irregularity_min", c.irregularity_min},
       {"irregularity_max", c.irregularity_max},
       {"handle_ext_min", c.handle_ext_min},
       {"handle_ext_max", c.handle_ext_max},
       {"color_min", c.color_min},
       {"color_max", c.color_max},
       {"pose", c.pose},
       {"goal", c.goal},
       {"min_param_distance", c.min_param_distance}};
}
void from_json(const json& j, CategoryConfig& c) {
  j.at("name").get_to(c.name);
  j.at("stages").get_to(c.stages);
  j.at("min_vertices").get_to(c.min_vertices);
  j.at("max_vertices").get_to(c.max_vertices);
  j.at("scale_min").get_to(c.scale_min);
  j.at("scale_max").get_to(c.scale_max);
  j.at("aspect_min").get_to(c.aspect_min);
  j.at("aspect_max").get_to(c.aspect_max);
  j.at("irregularity_min").get_to(c.irregularity_min);
  j.at("irregularity_max").get_to(c.irregularity_max);
  j.at("handle_ext_min").get_to(c.handle_ext_min);
  j.at("handle_ext_max").get_to(c.handle_ext_max);
  j.at("color_min").get_to(c.color_min);
  j.at("color_max").get_to(c.color_max);
  j.at("pose").get_to(c.pose);
  j.at("goal").get_to(c.goal);
  j.at("min_param_distance").get_to(c.min_param_distance);
}

void to_json(json& j, const BackboneSpec& s) {
  j = {{"model_id", s.model_id},
       {"patch_size", s.patch_size},
       {"stride", s.stride},
       {"embed_dim", s.embed_dim},
       {"num_layers", s.num_layers},
       {"num_heads", s.num_heads},
       {"mlp_ratio", s.mlp_ratio},
       {"extraction_layers", s.extraction_layers},
       {"frozen", s.frozen},
       {"descriptor", to_string(s.descriptor)},
       {"norm_mean", s.norm_mean},
       {"norm_std", s.norm_std},
       {"base_image_size", s.base_image_size}};
}
void from_json(const json& j, BackboneSpec& s) {
  j.at("model_id").get_to(s.model_id);
  j.at("patch_size").get_to(s.patch_size);
  j.at("stride").get_to(s.stride);
  j.at("embed_dim").get_to(s.embed_dim);
  j.at("num_layers").get_to(s.num_layers);
  j.at("num_heads").get_to(s.num_heads);
  if (j.contains("mlp_ratio")) j.at("mlp_ratio").get_to(s.mlp_ratio);
  j.at("extraction_layers").get_to(s.extraction_layers);
  if (j.contains("frozen")) j.at("frozen").get_to(s.frozen);
  if (j.contains("descriptor")) s.descriptor = descriptor_kind_from_string(j.at("descriptor"));
  if (j.contains("norm_mean")) j.at("norm_mean").get_to(s.norm_mean);
  if (j.contains("norm_std")) j.at("norm_std").get_to(s.norm_std);
  if (j.contains("base_image_size")) j.at("base_image_size").get_to(s.base_image_size);
}

void to_json(json& j, const AdapterSpec& a) {
  j = {{"source_layer", a.source_layer},
       {"projection_width", a.projection_width},
       {"target_height", a.target_height},
       {"target_width", a.target_width},
       {"insertion_point", a.insertion_point}};
}
void from_json(const json& j, AdapterSpec& a) {
  j.at("source_layer").get_to(a.source_layer);
  j.at("projection_width").get_to(a.projection_width);
  j.at("target_height").get_to(a.target_height);
  j.at("target_width").get_to(a.target_width);
  j.at("insertion_point").get_to(a.insertion_point);
}

void to_json(json& j, const ControlStreamSpec& c) {
  j = {{"stem_channels", c.stem_channels}, {"learned_width", c.learned_width},
       {"fused_width", c.fused_width},     {"lfs_width", c.lfs_width},
       {"lfs_sections", c.lfs_sections}};
}
void from_json(const json& j, ControlStreamSpec& c) {
  j.at("stem_channels").get_to(c.stem_channels);
  j.at("learned_width").get_to(c.learned_width);
  j.at("fused_width").get_to(c.fused_width);
  j.at("lfs_width").get_to(c.lfs_width);
  j.at("lfs_sections").get_to(c.lfs_sections);
}

void to_json(json& j, const EncoderConfig& c) {
  j = {{"variant", to_string(c.variant)},
       {"adapters", c.adapters},
       {"input_channels", c.input_channels},
       {"ablation", to_string(c.ablation)},
       {"image_size", c.image_size},
       {"backbone_channels", c.backbone_channels},
       {"arch", c.arch}};
}
void from_json(const json& j, EncoderConfig& c) {
  c.variant = encoder_variant_from_string(j.at("variant"));
  j.at("adapters").get_to(c.adapters);
  j.at("input_channels").get_to(c.input_channels);
  c.ablation = ablation_from_string(j.value("ablation", "none"));
  j.at("image_size").get_to(c.image_size);
  j.at("backbone_channels").get_to(c.backbone_channels);
  j.at("arch").get_to(c.arch);
}

void to_json(json& j, const PolicySpec& s) {
  j = {{"encoder", s.encoder},       {"mlp_hidden", s.mlp_hidden},
       {"action_dim", s.action_dim}, {"proprioception", s.proprioception},
       {"frames", s.frames},         {"views", s.views},
       {"action_bounds", s.action_bounds}};
}
void from_json(const json& j, PolicySpec& s) {
  j.at("encoder").get_to(s.encoder);
  j.at("mlp_hidden").get_to(s.mlp_hidden);
  j.at("action_dim").get_to(s.action_dim);
  if (j.contains("proprioception")) j.at("proprioception").get_to(s.proprioception);
  j.at("frames").get_to(s.frames);
  j.at("views").get_to(s.views);
  j.at("action_bounds").get_to(s.action_bounds);
}

void to_json(json& j, const AugmentConfig& c) {
  j = {{"mode", to_string(c.mode)},
       {"p_aug", c.p_aug},
       {"crop_scale", {c.crop_scale_lo, c.crop_scale_hi}},
       {"pad", c.pad},
       {"brightness", c.brightness},
       {"output_size", c.output_size}};
}
void from_json(const json& j, AugmentConfig& c) {
  c.mode = augment_mode_from_string(j.at("mode"));
  j.at("p_aug").get_to(c.p_aug);
  const auto scale = j.at("crop_scale").get<std::array<float, 2>>();
  c.crop_scale_lo = scale[0];
  c.crop_scale_hi = scale[1];
  j.at("pad").get_to(c.pad);
  j.at("brightness").get_to(c.brightness);
  j.at("output_size").get_to(c.output_size);
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"steps", c.steps},
       {"seed", c.seed},
       {"dagger_iterations", c.dagger_iterations},
       {"rollouts_per_iteration", c.rollouts_per_iteration},
       {"updates_per_iteration", c.updates_per_iteration},
       {"use_cache", c.use_cache}};
}
void from_json(const json& j, TrainConfig& c) {
  j.at("batch_size").get_to(c.batch_size);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("steps").get_to(c.steps);
  j.at("seed").get_to(c.seed);
  j.at("dagger_iterations").get_to(c.dagger_iterations);
  j.at("rollouts_per_iteration").get_to(c.rollouts_per_iteration);
  j.at("updates_per_iteration").get_to(c.updates_per_iteration);
  j.at("use_cache").get_to(c.use_cache);
}

void to_json(json& j, const ActionVector& a) {
  j = {a.dx, a.dy, a.dz, a.droll, a.dpitch, a.dyaw, a.gripper};
}
void from_json(const json& j, ActionVector& a) {
  auto arr = j.get<std::array<float, ActionVector::kDim>>();
  a = ActionVector::from_array(arr);
}

void to_json(json& j, const EvalReport& r) {
  json rows = json::array();
  for (const auto& pi : r.instances)
    rows.push_back({{"instance_id", pi.instance_id},
                    {"split", to_string(pi.split)},
                    {"trials", pi.trials},
                    {"mean_score", pi.mean_score}});
  j = {{"instances", rows},
       {"seen_mean", r.seen_mean},
       {"seen_stderr", r.seen_stderr},
       {"heldout_mean", r.heldout_mean},
       {"heldout_stderr", r.heldout_stderr},
       {"trials_per_instance", r.trials_per_instance}};
}
void from_json(const json& j, EvalReport& r) {
  r.instances.clear();
  for (const json& row : j.at("instances")) {
    EvalReport::PerInstance pi;
    row.at("instance_id").get_to(pi.instance_id);
    pi.split = row.at("split").get<std::string>() == "heldout" ? Split::heldout : Split::train;
    row.at("trials").get_to(pi.trials);
    row.at("mean_score").get_to(pi.mean_score);
    r.instances.push_back(pi);
  }
  j.at("seen_mean").get_to(r.seen_mean);
  j.at("seen_stderr").get_to(r.seen_stderr);
  j.at("heldout_mean").get_to(r.heldout_mean);
  j.at("heldout_stderr").get_to(r.heldout_stderr);
  j.at("trials_per_instance").get_to(r.trials_per_instance);
}

std::string canonical_dump(const json& j) { return j.dump(); }

}  // namespace spawnnet
