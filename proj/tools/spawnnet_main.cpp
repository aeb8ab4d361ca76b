// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0
//
// spawnnet CLI: cache | collect | train | eval | compare | heatmaps | sweep
// plus init-config for emitting the built-in method configs.
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "spawnnet/checkpoint.hpp"
#include "spawnnet/experiment.hpp"
#include "spawnnet/feature_cache.hpp"

using namespace spawnnet;
namespace fs = std::filesystem;

namespace {

std::string default_cache_root() {
  if (const char* env = std::getenv("SPAWNNET_CACHE_ROOT")) return env;
  return "spawnnet_cache";
}

ExperimentConfig resolve_config(const std::string& config_path, const std::string& method,
                                const std::vector<std::string>& overrides) {
  nlohmann::json j;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw ConfigError("cannot open config file: " + config_path);
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config parse error: ") + e.what());
    }
  } else if (!method.empty()) {
    j = desk_config(method);
  } else {
    throw ConfigError("either --config or --method is required");
  }
  for (const std::string& assignment : overrides) apply_override(j, assignment);
  ExperimentConfig cfg;
  try {
    cfg = j.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::vector<std::uint64_t> seed_list(const std::vector<std::uint64_t>& seeds) {
  return seeds.empty() ? std::vector<std::uint64_t>{0} : seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spawnnet: two-stream visuomotor policies on a desk-scale benchmark"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path, method, out_dir = "runs", cache_root = default_cache_root();
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  app.add_option("--config", config_path, "experiment config JSON file");
  app.add_option("--method", method, "built-in method tag instead of --config");
  app.add_option("--set", overrides, "config override key.path=value (repeatable)");
  app.add_option("--out", out_dir, "output directory for records/tables");
  app.add_option("--cache-root", cache_root, "demo/feature cache root (SPAWNNET_CACHE_ROOT)");
  app.add_option("--seed", seeds, "run seed(s); default 0");

  auto* cmd_cache = app.add_subcommand("cache", "collect demos if needed and build the feature cache");
  auto* cmd_collect = app.add_subcommand("collect", "collect scripted-expert demonstrations");
  auto* cmd_train = app.add_subcommand("train", "train one policy (first seed)");
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a stored checkpoint");
  auto* cmd_compare = app.add_subcommand("compare", "run a method grid and emit the comparison table");
  auto* cmd_heatmaps = app.add_subcommand("heatmaps", "emit adapter-norm overlays for a trajectory");
  auto* cmd_sweep = app.add_subcommand("sweep", "demo-count sweep");
  auto* cmd_init = app.add_subcommand("init-config", "write a built-in method config to a file");

  std::string ckpt_path, traj_root, traj_id, heatmap_out = "heatmaps";
  cmd_eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  cmd_heatmaps->add_option("--checkpoint", ckpt_path, "trained spawnnet checkpoint")->required();
  cmd_heatmaps->add_option("--trajectory-root", traj_root, "trajectory store root")->required();
  cmd_heatmaps->add_option("--trajectory", traj_id, "trajectory id")->required();
  cmd_heatmaps->add_option("--heatmap-out", heatmap_out, "output directory");

  std::vector<std::string> grid_methods;
  cmd_compare->add_option("--methods", grid_methods,
                          "method tags for the grid (default: full Fig-5 style grid)");

  std::vector<int> demo_counts{30, 60, 90};
  cmd_sweep->add_option("--counts", demo_counts, "demo counts");

  std::string init_out = "config.json";
  cmd_init->add_option("--output", init_out, "output file");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentRunner runner(out_dir, cache_root);

    if (cmd_init->parsed()) {
      if (method.empty()) throw ConfigError("init-config requires --method");
      save_experiment_config(init_out, desk_config(method));
      std::cout << "wrote " << init_out << "\n";
      return 0;
    }

    if (cmd_collect->parsed()) {
      const ExperimentConfig cfg = resolve_config(config_path, method, overrides);
      const std::string dir = runner.ensure_demos(cfg);
      std::cout << "demos ready in " << dir << "\n";
      return 0;
    }

    if (cmd_cache->parsed()) {
      const ExperimentConfig cfg = resolve_config(config_path, method, overrides);
      const std::string demo_dir = runner.ensure_demos(cfg);
      const std::string cache_dir = runner.ensure_cache(cfg, demo_dir);
      std::cout << "feature cache ready in " << cache_dir << "\n";
      return 0;
    }

    if (cmd_train->parsed()) {
      const ExperimentConfig cfg = resolve_config(config_path, method, overrides);
      const auto records = runner.run(cfg, seed_list(seeds));
      for (const auto& rec : records) {
        if (!rec.error.empty()) {
          std::cerr << "seed " << rec.seed << " failed: " << rec.error << "\n";
          return 2;
        }
        std::cout << rec.record_id << ": seen " << rec.eval.seen_mean << " heldout "
                  << rec.eval.heldout_mean << " (checkpoint " << rec.checkpoint_path << ")\n";
      }
      return 0;
    }

    if (cmd_eval->parsed()) {
      const ExperimentConfig cfg = resolve_config(config_path, method, overrides);
      Policy<float> policy(cfg.policy, 0);
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      auto params = policy.parameters();
      apply_checkpoint(ckpt, params, cfg.hash());
      std::unique_ptr<VisionTransformer> backbone;
      std::unique_ptr<LiveFeatureProvider> provider;
      if (cfg.policy.encoder.is_spawnnet() ||
          cfg.policy.encoder.variant == EncoderVariant::frozen_cls) {
        backbone = std::make_unique<VisionTransformer>(cfg.backbone);
        provider = std::make_unique<LiveFeatureProvider>(*backbone, 512);
      }
      const auto instances = generate_instances(cfg.category, cfg.bench.n_train,
                                                cfg.bench.n_heldout, cfg.bench.instance_seed);
      Env env(cfg.category);
      const EvalReport report =
          evaluate(make_policy_fn(policy, provider.get()), env, instances,
                   cfg.eval.trials_per_instance, seed_list(seeds)[0], obs_config_from(cfg.policy));
      std::cout << "seen " << report.seen_mean << " +/- " << report.seen_stderr << " | heldout "
                << report.heldout_mean << " +/- " << report.heldout_stderr << "\n";
      for (const auto& pi : report.instances)
        std::cout << "  " << pi.instance_id << " (" << to_string(pi.split)
                  << "): " << pi.mean_score << "\n";
      return 0;
    }

    if (cmd_compare->parsed()) {
      std::vector<ExperimentConfig> configs;
      if (!grid_methods.empty()) {
        for (const std::string& m : grid_methods) configs.push_back(desk_config(m));
      } else if (!config_path.empty()) {
        configs.push_back(resolve_config(config_path, "", overrides));
      } else {
        for (const std::string& m :
             {"spawnnet_d", "spawnnet", "lfs_aug_d", "lfs_aug", "frozen_cls"})
          configs.push_back(desk_config(m));
      }
      const ComparisonTable table = runner.compare(configs, seed_list(seeds));
      std::cout << table.render_text();
      return 0;
    }

    if (cmd_sweep->parsed()) {
      const ExperimentConfig cfg = resolve_config(config_path, method, overrides);
      const ComparisonTable table = runner.demo_sweep(cfg, demo_counts, seed_list(seeds));
      std::cout << table.render_text();
      return 0;
    }

    if (cmd_heatmaps->parsed()) {
      const ExperimentConfig cfg = resolve_config(config_path, method, overrides);
      const auto stats = runner.emit_heatmaps(cfg, ckpt_path, traj_root, traj_id, heatmap_out);
      std::cout << "wrote " << stats.steps << " overlays to " << heatmap_out
                << " (handle-region mean " << stats.handle_region_mean << ", image mean "
                << stats.image_mean << ")\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
