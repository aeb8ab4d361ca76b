// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0
//
// Run orchestration: config files, demo/cache staging, train + evaluate per
// seed, append-only run records, comparison tables, demo-count sweeps and
// adapter-norm heatmap export.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spawnnet/bench.hpp"
#include "spawnnet/imitation.hpp"
#include "spawnnet/rollout.hpp"
#include "spawnnet/serialization.hpp"

namespace spawnnet {

struct BenchSplitConfig {
  std::string category = "bags";
  int n_train = 3;
  int n_heldout = 6;
  std::uint64_t instance_seed = 7;
};

struct EvalConfig {
  int trials_per_instance = 5;
};

struct CollectConfig {
  int demos_per_instance = 30;
};

struct ExperimentConfig {
  std::string name = "run";
  std::string method = "spawnnet";  // method tag, see validate()
  std::string trainer = "bc";       // "bc" | "dagger"
  BackboneSpec backbone;
  PolicySpec policy;
  TrainConfig train;
  AugmentConfig augment;
  BenchSplitConfig bench;
  CategoryConfig category;  // resolved category ranges
  EvalConfig eval;
  CollectConfig collect;

  /// Cross-field consistency: method tag vs encoder variant/ablation/augment,
  /// adapter sources vs backbone extraction layers, channel counts.
  void validate() const;

  std::uint64_t hash() const;
  /// Hash of everything that determines the demo set (category, splits,
  /// collect counts, views, image size); binds the shared demo directory.
  std::uint64_t demo_hash() const;
  /// Demo hash + backbone spec; binds the shared feature cache directory.
  std::uint64_t cache_hash() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_experiment_config(const std::string& path);
void save_experiment_config(const std::string& path, const ExperimentConfig& cfg);
/// Applies `key.path=value` overrides (values parsed as JSON, falling back
/// to string).
void apply_override(nlohmann::json& config_json, const std::string& assignment);

/// Built-in desk-scale configs for the shipped method grid. Tags:
/// spawnnet, spawnnet_d, lfs_aug, lfs_aug_d, frozen_cls,
/// ablation:zero_pretrained, ablation:last_layer_only, ablation:cls_tiled.
ExperimentConfig desk_config(const std::string& method);
/// Full-width policy spec (ViT-S/8 grids, 4 frames x 2 views) used for
/// parameter-count checks; not meant for CPU training.
PolicySpec paper_scale_policy(const std::string& method);

struct RunRecord {
  std::string record_id;
  std::string method;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<double> loss_curve;
  EvalReport eval;
  double train_seconds = 0, total_seconds = 0;
  std::vector<std::string> deviation_flags;
  std::string checkpoint_path;
  std::string error;  // non-empty when the seed failed
};

void to_json(nlohmann::json& j, const RunRecord& r);
void from_json(const nlohmann::json& j, RunRecord& r);

struct ComparisonRow {
  std::string method;
  int seeds = 0;
  double seen_mean = 0, heldout_mean = 0;
  std::optional<double> seen_stderr, heldout_stderr;  // absent for 1 seed
  std::vector<std::string> record_ids;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::string render_text() const;
  std::string render_csv() const;
};

/// Seed-aggregated rows from stored records (the text/CSV renderings are a
/// pure function of the records).
ComparisonTable table_from_records(const std::vector<std::vector<RunRecord>>& per_method);

class ExperimentRunner {
 public:
  /// `out_dir` receives run records/checkpoints/tables; `cache_root` holds
  /// the shared demo store and feature caches (SPAWNNET_CACHE_ROOT).
  ExperimentRunner(std::string out_dir, std::string cache_root);

  std::string ensure_demos(const ExperimentConfig& cfg);
  std::string ensure_cache(const ExperimentConfig& cfg, const std::string& demo_dir);

  RunRecord run_one(const ExperimentConfig& cfg, std::uint64_t seed);
  /// One record per seed; a seed failure is recorded, not fatal.
  std::vector<RunRecord> run(const ExperimentConfig& cfg,
                             const std::vector<std::uint64_t>& seeds);

  /// Requires all configs to share the same bench splits.
  ComparisonTable compare(const std::vector<ExperimentConfig>& configs,
                          const std::vector<std::uint64_t>& seeds);

  /// Heldout success vs demo count; per-instance subsampling stays balanced.
  ComparisonTable demo_sweep(const ExperimentConfig& cfg, const std::vector<int>& demo_counts,
                             const std::vector<std::uint64_t>& seeds);

  struct HeatmapStats {
    int steps = 0;
    double handle_region_mean = 0;
    double image_mean = 0;
  };
  /// Writes one overlay PNG per trajectory step (last adapter's norm map)
  /// plus stats.json. Throws UnsupportedMethodError for non-spawnnet configs.
  HeatmapStats emit_heatmaps(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                             const std::string& traj_root, const std::string& traj_id,
                             const std::string& heatmap_dir);

  const std::string& out_dir() const { return out_dir_; }

 private:
  RunRecord run_one_impl(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::vector<std::string>* demo_subset);

  std::string out_dir_, cache_root_;
};

/// Builds the policy + provider for a trained checkpoint and wraps them as
/// an evaluation callback (live features).
PolicyFn make_policy_fn(Policy<float>& policy, FeatureProvider* provider);

}  // namespace spawnnet
