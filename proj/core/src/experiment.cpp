// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spawnnet/checkpoint.hpp"
#include "spawnnet/feature_cache.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace spawnnet {

namespace {

std::string hex64_str(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp);
    f << text;
  }
  fs::rename(tmp, path);
}

struct ParsedFrameId {
  std::string traj_id;
  int step = 0;
  std::string view;
};

// "<traj_id>.s%04d.<view>"
ParsedFrameId parse_frame_id(const std::string& id) {
  const auto view_dot = id.rfind('.');
  if (view_dot == std::string::npos) throw InputError("bad frame id: " + id);
  const auto step_dot = id.rfind(".s", view_dot - 1);
  if (step_dot == std::string::npos) throw InputError("bad frame id: " + id);
  ParsedFrameId p;
  p.traj_id = id.substr(0, step_dot);
  p.step = std::stoi(id.substr(step_dot + 2, view_dot - step_dot - 2));
  p.view = id.substr(view_dot + 1);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void to_json(json& j, const ExperimentConfig& c) {
  j = {{"name", c.name},
       {"method", c.method},
       {"trainer", c.trainer},
       {"backbone", c.backbone},
       {"policy", c.policy},
       {"train", c.train},
       {"augment", c.augment},
       {"bench",
        {{"category", c.bench.category},
         {"n_train", c.bench.n_train},
         {"n_heldout", c.bench.n_heldout},
         {"instance_seed", c.bench.instance_seed}}},
       {"category_config", c.category},
       {"eval", {{"trials_per_instance", c.eval.trials_per_instance}}},
       {"collect", {{"demos_per_instance", c.collect.demos_per_instance}}}};
}

void from_json(const json& j, ExperimentConfig& c) {
  j.at("name").get_to(c.name);
  j.at("method").get_to(c.method);
  c.trainer = j.value("trainer", "bc");
  j.at("backbone").get_to(c.backbone);
  j.at("policy").get_to(c.policy);
  j.at("train").get_to(c.train);
  j.at("augment").get_to(c.augment);
  const json& b = j.at("bench");
  b.at("category").get_to(c.bench.category);
  b.at("n_train").get_to(c.bench.n_train);
  b.at("n_heldout").get_to(c.bench.n_heldout);
  b.at("instance_seed").get_to(c.bench.instance_seed);
  if (j.contains("category_config"))
    j.at("category_config").get_to(c.category);
  else
    c.category = CategoryConfig::builtin(c.bench.category);
  c.eval.trials_per_instance = j.at("eval").at("trials_per_instance").get<int>();
  c.collect.demos_per_instance = j.at("collect").at("demos_per_instance").get<int>();
}

void ExperimentConfig::validate() const {
  backbone.validate();
  policy.validate();
  train.validate();
  if (trainer != "bc" && trainer != "dagger")
    throw ConfigError("config: trainer must be 'bc' or 'dagger'");
  if (bench.n_train < 1) throw ConfigError("config: need at least one training instance");
  if (eval.trials_per_instance < 1) throw ConfigError("config: trials_per_instance must be >= 1");
  if (category.name != bench.category)
    throw ConfigError("config: category_config.name does not match bench.category");

  const EncoderConfig& enc = policy.encoder;
  if (enc.backbone_channels != backbone.embed_dim &&
      (enc.is_spawnnet() || enc.variant == EncoderVariant::frozen_cls))
    throw ConfigError("config: encoder.backbone_channels must equal backbone.embed_dim");
  for (const AdapterSpec& a : enc.adapters)
    if (std::find(backbone.extraction_layers.begin(), backbone.extraction_layers.end(),
                  a.source_layer) == backbone.extraction_layers.end())
      throw ConfigError("config: adapter source layer " + std::to_string(a.source_layer) +
                        " is not an extraction layer of the backbone");

  // method tag <-> encoder/augment consistency
  auto expect = [this](bool cond, const std::string& what) {
    if (!cond) throw ConfigError("config: method tag '" + method + "' requires " + what);
  };
  if (method == "spawnnet") {
    expect(enc.variant == EncoderVariant::spawnnet && enc.ablation == Ablation::none,
           "the spawnnet encoder variant without ablation");
  } else if (method == "spawnnet_d") {
    expect(enc.variant == EncoderVariant::spawnnet_depth && enc.ablation == Ablation::none,
           "the spawnnet_depth encoder variant without ablation");
  } else if (method == "lfs_aug") {
    expect(enc.variant == EncoderVariant::lfs, "the lfs encoder variant");
    expect(augment.mode != AugmentMode::none, "augmentation enabled");
  } else if (method == "lfs_aug_d") {
    expect(enc.variant == EncoderVariant::lfs_depth, "the lfs_depth encoder variant");
    expect(augment.mode != AugmentMode::none, "augmentation enabled");
  } else if (method == "frozen_cls") {
    expect(enc.variant == EncoderVariant::frozen_cls, "the frozen_cls encoder variant");
  } else if (method.rfind("ablation:", 0) == 0) {
    const Ablation a = ablation_from_string(method.substr(9));
    expect(enc.is_spawnnet(), "a spawnnet encoder variant");
    expect(enc.ablation == a, "ablation = " + method.substr(9));
  } else {
    throw ConfigError("config: unknown method tag '" + method + "'");
  }
}

std::uint64_t ExperimentConfig::hash() const {
  json j = *this;
  return fnv1a64(canonical_dump(j));
}

std::uint64_t ExperimentConfig::demo_hash() const {
  json j = {{"category", category},
            {"n_train", bench.n_train},
            {"n_heldout", bench.n_heldout},
            {"instance_seed", bench.instance_seed},
            {"demos_per_instance", collect.demos_per_instance},
            {"views", policy.views},
            {"image_size", policy.encoder.image_size}};
  return fnv1a64(canonical_dump(j));
}

std::uint64_t ExperimentConfig::cache_hash() const {
  return splitmix64(demo_hash() ^ backbone.hash());
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ConfigError("config field error in " + path + ": " + e.what());
  }
}

void save_experiment_config(const std::string& path, const ExperimentConfig& cfg) {
  json j = cfg;
  write_text_atomic(path, j.dump(2) + "\n");
}

void apply_override(json& config_json, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("--set expects key.path=value, got: " + assignment);
  std::string pointer = "/" + assignment.substr(0, eq);
  for (auto& ch : pointer)
    if (ch == '.') ch = '/';
  const std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // plain string
  }
  config_json[json::json_pointer(pointer)] = parsed;
}

// ---------------------------------------------------------------------------
// Built-in configs

namespace {

BackboneSpec desk_backbone() {
  BackboneSpec b;
  b.model_id = "random:1234";
  b.patch_size = 16;
  b.stride = 16;
  b.embed_dim = 96;
  b.num_layers = 12;
  b.num_heads = 6;
  b.extraction_layers = {6, 9, 12};
  b.base_image_size = 224;
  return b;
}

EncoderConfig desk_encoder(EncoderVariant variant, Ablation ablation) {
  EncoderConfig enc;
  enc.variant = variant;
  enc.ablation = ablation;
  enc.image_size = 224;
  enc.backbone_channels = 96;
  enc.input_channels = (variant == EncoderVariant::spawnnet_depth ||
                        variant == EncoderVariant::lfs_depth)
                           ? 4
                           : 3;
  enc.arch.stem_channels = 16;
  enc.arch.learned_width = 32;
  enc.arch.fused_width = 64;
  enc.arch.lfs_width = 48;
  enc.arch.lfs_sections = 3;
  if (variant == EncoderVariant::spawnnet || variant == EncoderVariant::spawnnet_depth)
    enc.adapters = default_adapters({6, 9, 12}, 32, 224);
  return enc;
}

}  // namespace

ExperimentConfig desk_config(const std::string& method) {
  ExperimentConfig cfg;
  cfg.method = method;
  cfg.name = method;
  for (auto& ch : cfg.name)
    if (ch == ':') ch = '_';
  cfg.trainer = "bc";
  cfg.backbone = desk_backbone();

  EncoderVariant variant = EncoderVariant::spawnnet;
  Ablation ablation = Ablation::none;
  bool aug = false;
  if (method == "spawnnet") {
    variant = EncoderVariant::spawnnet;
  } else if (method == "spawnnet_d") {
    variant = EncoderVariant::spawnnet_depth;
  } else if (method == "lfs_aug") {
    variant = EncoderVariant::lfs;
    aug = true;
  } else if (method == "lfs_aug_d") {
    variant = EncoderVariant::lfs_depth;
    aug = true;
  } else if (method == "frozen_cls") {
    variant = EncoderVariant::frozen_cls;
  } else if (method.rfind("ablation:", 0) == 0) {
    variant = EncoderVariant::spawnnet_depth;  // ablate the full method
    ablation = ablation_from_string(method.substr(9));
  } else {
    throw ConfigError("desk_config: unknown method tag '" + method + "'");
  }

  cfg.policy.encoder = desk_encoder(variant, ablation);
  cfg.policy.mlp_hidden = {256, 128};
  cfg.policy.action_dim = ActionVector::kDim;
  cfg.policy.frames = 2;
  cfg.policy.views = {"global"};
  cfg.policy.action_bounds = {Env::kMaxStep, Env::kMaxStep, 0.f, 0.f, 0.f, 0.f};

  cfg.train.batch_size = 8;
  cfg.train.learning_rate = 3e-4;
  cfg.train.steps = 700;
  cfg.train.use_cache = true;

  cfg.augment.mode = aug ? AugmentMode::sim_shift : AugmentMode::none;
  cfg.augment.p_aug = 0.5f;
  cfg.augment.output_size = 224;

  cfg.bench = BenchSplitConfig{};
  cfg.category = CategoryConfig::builtin(cfg.bench.category);
  cfg.eval.trials_per_instance = 5;
  cfg.collect.demos_per_instance = 30;
  cfg.validate();
  return cfg;
}

PolicySpec paper_scale_policy(const std::string& method) {
  PolicySpec spec;
  spec.mlp_hidden = {256, 128};
  spec.action_dim = ActionVector::kDim;
  spec.frames = 4;
  spec.views = {"third_person", "wrist"};
  EncoderConfig enc;
  enc.image_size = 224;
  enc.backbone_channels = 384;  // ViT-S grids
  enc.arch = ControlStreamSpec{};  // full widths
  if (method == "spawnnet" || method == "spawnnet_d") {
    enc.variant = method == "spawnnet_d" ? EncoderVariant::spawnnet_depth : EncoderVariant::spawnnet;
    enc.input_channels = method == "spawnnet_d" ? 4 : 3;
    enc.adapters = default_adapters({6, 9, 12}, 64, 224);
  } else if (method == "lfs" || method == "lfs_aug" || method == "lfs_aug_d") {
    enc.variant = method == "lfs_aug_d" ? EncoderVariant::lfs_depth : EncoderVariant::lfs;
    enc.input_channels = method == "lfs_aug_d" ? 4 : 3;
  } else if (method == "frozen_cls") {
    enc.variant = EncoderVariant::frozen_cls;
    enc.input_channels = 3;
  } else {
    throw ConfigError("paper_scale_policy: unknown method " + method);
  }
  spec.encoder = enc;
  return spec;
}

// ---------------------------------------------------------------------------
// Records and tables

void to_json(json& j, const RunRecord& r) {
  j = {{"record_id", r.record_id},
       {"method", r.method},
       {"config_hash", hex64_str(r.config_hash)},
       {"seed", r.seed},
       {"loss_curve", r.loss_curve},
       {"eval", r.eval},
       {"train_seconds", r.train_seconds},
       {"total_seconds", r.total_seconds},
       {"deviation_flags", r.deviation_flags},
       {"checkpoint_path", r.checkpoint_path},
       {"error", r.error}};
}

void from_json(const json& j, RunRecord& r) {
  j.at("record_id").get_to(r.record_id);
  j.at("method").get_to(r.method);
  r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  j.at("seed").get_to(r.seed);
  j.at("loss_curve").get_to(r.loss_curve);
  j.at("eval").get_to(r.eval);
  j.at("train_seconds").get_to(r.train_seconds);
  j.at("total_seconds").get_to(r.total_seconds);
  j.at("deviation_flags").get_to(r.deviation_flags);
  j.at("checkpoint_path").get_to(r.checkpoint_path);
  j.at("error").get_to(r.error);
}

ComparisonTable table_from_records(const std::vector<std::vector<RunRecord>>& per_method) {
  ComparisonTable table;
  for (const auto& records : per_method) {
    ComparisonRow row;
    std::vector<double> seen, heldout;
    for (const RunRecord& r : records) {
      if (row.method.empty()) row.method = r.method;
      row.record_ids.push_back(r.record_id);
      if (!r.error.empty()) continue;
      seen.push_back(r.eval.seen_mean);
      heldout.push_back(r.eval.heldout_mean);
    }
    row.seeds = int(seen.size());
    auto mean_of = [](const std::vector<double>& v) {
      double m = 0;
      for (double x : v) m += x;
      return v.empty() ? 0.0 : m / double(v.size());
    };
    auto stderr_of = [&mean_of](const std::vector<double>& v) -> std::optional<double> {
      if (v.size() < 2) return std::nullopt;
      const double m = mean_of(v);
      double var = 0;
      for (double x : v) var += (x - m) * (x - m);
      return std::sqrt(var / double(v.size() - 1)) / std::sqrt(double(v.size()));
    };
    row.seen_mean = mean_of(seen);
    row.heldout_mean = mean_of(heldout);
    row.seen_stderr = stderr_of(seen);
    row.heldout_stderr = stderr_of(heldout);
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {
std::string fmt_pm(double mean, const std::optional<double>& se) {
  char buf[64];
  if (se)
    std::snprintf(buf, sizeof(buf), "%.3f +/- %.3f", mean, *se);
  else
    std::snprintf(buf, sizeof(buf), "%.3f +/- -", mean);
  return buf;
}
}  // namespace

std::string ComparisonTable::render_text() const {
  std::ostringstream os;
  os << "method               | seen                 | heldout              | seeds\n";
  os << "---------------------+----------------------+----------------------+------\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-20s | %-20s | %-20s | %d\n", r.method.c_str(),
                  fmt_pm(r.seen_mean, r.seen_stderr).c_str(),
                  fmt_pm(r.heldout_mean, r.heldout_stderr).c_str(), r.seeds);
    os << line;
  }
  return os.str();
}

std::string ComparisonTable::render_csv() const {
  std::ostringstream os;
  os << "method,seen_mean,seen_stderr,heldout_mean,heldout_stderr,seeds,record_ids\n";
  for (const auto& r : rows) {
    os << r.method << "," << r.seen_mean << ",";
    if (r.seen_stderr) os << *r.seen_stderr;
    os << "," << r.heldout_mean << ",";
    if (r.heldout_stderr) os << *r.heldout_stderr;
    os << "," << r.seeds << ",";
    for (std::size_t i = 0; i < r.record_ids.size(); ++i)
      os << (i ? ";" : "") << r.record_ids[i];
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Runner

ExperimentRunner::ExperimentRunner(std::string out_dir, std::string cache_root)
    : out_dir_(std::move(out_dir)), cache_root_(std::move(cache_root)) {
  fs::create_directories(out_dir_);
  fs::create_directories(cache_root_);
}

std::string ExperimentRunner::ensure_demos(const ExperimentConfig& cfg) {
  const fs::path dir = fs::path(cache_root_) / ("demos_" + hex64_str(cfg.demo_hash()));
  const fs::path marker = dir / "COLLECTED";
  const int expected = cfg.collect.demos_per_instance * cfg.bench.n_train;
  if (fs::exists(marker)) return dir.string();

  std::cerr << "[runner] collecting " << expected << " demos into " << dir << "\n";
  fs::create_directories(dir);
  const auto instances =
      generate_instances(cfg.category, cfg.bench.n_train, cfg.bench.n_heldout,
                         cfg.bench.instance_seed);
  std::vector<InstanceSpec> train_insts;
  for (const auto& inst : instances)
    if (inst.split == Split::train) train_insts.push_back(inst);

  Env env(cfg.category);
  ObsConfig obs_cfg;
  obs_cfg.frames = cfg.policy.frames;
  obs_cfg.views = cfg.policy.views;
  const auto demos = collect_demos(env, train_insts, cfg.collect.demos_per_instance,
                                   cfg.bench.instance_seed, obs_cfg, "demo");
  for (const Trajectory& traj : demos) save_trajectory(dir.string(), traj);
  write_text_atomic(marker, std::to_string(expected) + "\n");
  return dir.string();
}

std::string ExperimentRunner::ensure_cache(const ExperimentConfig& cfg,
                                           const std::string& demo_dir) {
  const fs::path dir = fs::path(cache_root_) / ("features_" + hex64_str(cfg.cache_hash()));
  try {
    FeatureCacheReader reader(dir.string(), cfg.backbone.hash());
    return dir.string();  // valid cache already present
  } catch (const Error&) {
    // fall through and (re)build
  }
  std::cerr << "[runner] building feature cache in " << dir << "\n";
  const VisionTransformer backbone(cfg.backbone);
  DiskSampleSource source(demo_dir);
  const std::vector<std::string> ids = source.all_frame_ids();
  build_cache(
      backbone, ids,
      [&demo_dir](const std::string& id) {
        const ParsedFrameId p = parse_frame_id(id);
        const Image rgbd = load_step_frame(demo_dir, p.traj_id, p.step, p.view);
        Image rgb(rgbd.h, rgbd.w, 3);
        for (int y = 0; y < rgbd.h; ++y)
          for (int x = 0; x < rgbd.w; ++x)
            for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = rgbd.at(y, x, c);
        return rgb;
      },
      dir.string());
  return dir.string();
}

PolicyFn make_policy_fn(Policy<float>& policy, FeatureProvider* provider) {
  return [&policy, provider](const Observation& obs) { return act(policy, obs, provider); };
}

RunRecord ExperimentRunner::run_one(const ExperimentConfig& cfg, std::uint64_t seed) {
  return run_one_impl(cfg, seed, nullptr);
}

RunRecord ExperimentRunner::run_one_impl(const ExperimentConfig& cfg, std::uint64_t seed,
                                         const std::vector<std::string>* demo_subset) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.method = cfg.method;
  rec.config_hash = cfg.hash();
  rec.seed = seed;
  rec.record_id = cfg.name + "_seed" + std::to_string(seed);

  const fs::path record_path = fs::path(out_dir_) / (rec.record_id + ".json");
  if (fs::exists(record_path)) {
    std::ifstream f(record_path);
    RunRecord existing = json::parse(f).get<RunRecord>();
    if (existing.config_hash == rec.config_hash && existing.error.empty()) {
      std::cerr << "[runner] reusing record " << rec.record_id << "\n";
      return existing;
    }
  }

  try {
    cfg.validate();
    const auto instances = generate_instances(cfg.category, cfg.bench.n_train,
                                              cfg.bench.n_heldout, cfg.bench.instance_seed);
    std::vector<InstanceSpec> train_insts;
    for (const auto& inst : instances)
      if (inst.split == Split::train) train_insts.push_back(inst);

    const EncoderConfig& enc = cfg.policy.encoder;
    const bool needs_features =
        enc.is_spawnnet() || enc.variant == EncoderVariant::frozen_cls;

    std::unique_ptr<VisionTransformer> backbone;
    if (needs_features) backbone = std::make_unique<VisionTransformer>(cfg.backbone);

    Policy<float> policy(cfg.policy, splitmix64(seed ^ cfg.hash()));

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seed;

    TrainMetrics metrics;
    if (cfg.trainer == "dagger") {
      Env env(cfg.category);
      const ExpertFn expert = [&cfg](const EnvState& s) { return scripted_expert(s, cfg.category); };
      metrics = dagger_train(env, train_insts, expert, policy, train_cfg, cfg.augment,
                             backbone.get());
    } else {
      const std::string demo_dir = ensure_demos(cfg);
      DiskSampleSource source(demo_dir, demo_subset ? *demo_subset : std::vector<std::string>{});
      std::unique_ptr<FeatureProvider> provider;
      if (needs_features) {
        if (train_cfg.use_cache) {
          const std::string cache_dir = ensure_cache(cfg, demo_dir);
          provider = std::make_unique<CachedFeatureProvider>(cache_dir, cfg.backbone.hash());
        } else {
          provider = std::make_unique<LiveFeatureProvider>(*backbone, 4096);
        }
      }
      metrics = bc_train(source, policy, train_cfg, cfg.augment, provider.get());
    }
    rec.loss_curve = metrics.loss_curve;
    rec.train_seconds = metrics.wall_seconds;
    if (metrics.aug_cache_deviation)
      rec.deviation_flags.push_back("control_stream_augmented_backbone_features_unaugmented");

    // evaluation always runs the backbone live on freshly rendered frames
    std::unique_ptr<LiveFeatureProvider> eval_provider;
    if (needs_features) eval_provider = std::make_unique<LiveFeatureProvider>(*backbone, 512);
    Env eval_env(cfg.category);
    const EvalReport report =
        evaluate(make_policy_fn(policy, eval_provider.get()), eval_env, instances,
                 cfg.eval.trials_per_instance, seed, obs_config_from(cfg.policy), &train_insts);
    rec.eval = report;

    const fs::path ckpt = fs::path(out_dir_) / (rec.record_id + ".ckpt");
    save_checkpoint(ckpt.string(), cfg.hash(), policy.parameters());
    rec.checkpoint_path = ckpt.string();
    save_experiment_config((fs::path(out_dir_) / (rec.record_id + ".config.json")).string(), cfg);
  } catch (const std::exception& e) {
    rec.error = e.what();
    std::cerr << "[runner] seed " << seed << " failed: " << e.what() << "\n";
  }

  rec.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json j = rec;
  write_text_atomic(record_path, j.dump(1) + "\n");
  return rec;
}

std::vector<RunRecord> ExperimentRunner::run(const ExperimentConfig& cfg,
                                             const std::vector<std::uint64_t>& seeds) {
  std::vector<RunRecord> records;
  for (std::uint64_t seed : seeds) records.push_back(run_one(cfg, seed));
  return records;
}

ComparisonTable ExperimentRunner::compare(const std::vector<ExperimentConfig>& configs,
                                          const std::vector<std::uint64_t>& seeds) {
  if (configs.size() < 2)
    std::cerr << "[runner] compare over " << configs.size() << " config(s)\n";
  for (const auto& cfg : configs) {
    json a = {{"category", cfg.category},
              {"n_train", cfg.bench.n_train},
              {"n_heldout", cfg.bench.n_heldout},
              {"instance_seed", cfg.bench.instance_seed}};
    json b = {{"category", configs[0].category},
              {"n_train", configs[0].bench.n_train},
              {"n_heldout", configs[0].bench.n_heldout},
              {"instance_seed", configs[0].bench.instance_seed}};
    if (canonical_dump(a) != canonical_dump(b))
      throw InputError("compare: configs do not share the same bench splits");
  }
  std::vector<std::vector<RunRecord>> per_method;
  for (const auto& cfg : configs) per_method.push_back(run(cfg, seeds));
  const ComparisonTable table = table_from_records(per_method);
  write_text_atomic(fs::path(out_dir_) / "compare.txt", table.render_text());
  write_text_atomic(fs::path(out_dir_) / "compare.csv", table.render_csv());
  return table;
}

ComparisonTable ExperimentRunner::demo_sweep(const ExperimentConfig& cfg,
                                             const std::vector<int>& demo_counts,
                                             const std::vector<std::uint64_t>& seeds) {
  const std::string demo_dir = ensure_demos(cfg);
  DiskSampleSource all(demo_dir);
  const std::vector<std::string> all_ids = all.trajectory_ids();
  // group demo ids by instance for balanced subsampling
  std::map<std::string, std::vector<std::string>> by_instance;
  for (const std::string& id : all_ids)
    by_instance[all.skeleton(id).instance_id].push_back(id);

  std::vector<std::vector<RunRecord>> per_count;
  for (int count : demo_counts) {
    if (count > int(all_ids.size()))
      throw InputError("demo_sweep: requested " + std::to_string(count) + " demos, only " +
                       std::to_string(all_ids.size()) + " available");
    const int k = int(by_instance.size());
    const int base = count / k;
    int rem = count % k;
    std::vector<std::string> chosen;
    Rng rng(splitmix64(cfg.bench.instance_seed ^ fnv1a64("demo_sweep") ^ std::uint64_t(count)));
    for (auto& [inst_id, ids] : by_instance) {
      int take = base + (rem > 0 ? 1 : 0);
      if (rem > 0) --rem;
      if (take > int(ids.size()))
        throw InputError("demo_sweep: instance " + inst_id + " has too few demos");
      // seeded partial Fisher-Yates
      std::vector<std::string> pool = ids;
      for (int i = 0; i < take; ++i) {
        const int j = int(rng.uniform_int(i, int(pool.size()) - 1));
        std::swap(pool[std::size_t(i)], pool[std::size_t(j)]);
        chosen.push_back(pool[std::size_t(i)]);
      }
    }
    std::sort(chosen.begin(), chosen.end());

    ExperimentConfig sub = cfg;
    sub.name = cfg.name + "_demos" + std::to_string(count);
    std::vector<RunRecord> records;
    for (std::uint64_t seed : seeds) {
      RunRecord rec = run_one_impl(sub, seed, &chosen);
      rec.method = cfg.method + " (" + std::to_string(count) + " demos)";
      records.push_back(rec);
    }
    per_count.push_back(records);
  }
  const ComparisonTable table = table_from_records(per_count);
  write_text_atomic(fs::path(out_dir_) / "sweep.txt", table.render_text());
  write_text_atomic(fs::path(out_dir_) / "sweep.csv", table.render_csv());
  return table;
}

ExperimentRunner::HeatmapStats ExperimentRunner::emit_heatmaps(const ExperimentConfig& cfg,
                                                               const std::string& checkpoint_path,
                                                               const std::string& traj_root,
                                                               const std::string& traj_id,
                                                               const std::string& heatmap_dir) {
  cfg.validate();
  if (!cfg.policy.encoder.is_spawnnet())
    throw UnsupportedMethodError("heatmaps: checkpoint method '" + cfg.method +
                                 "' has no adapters");
  fs::create_directories(heatmap_dir);

  Policy<float> policy(cfg.policy, 0);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  auto params = policy.parameters();
  apply_checkpoint(ckpt, params, cfg.hash());

  const VisionTransformer backbone(cfg.backbone);
  LiveFeatureProvider provider(backbone, 64);
  const Trajectory traj = load_trajectory(traj_root, traj_id);

  SpawnNetEncoder<float>* enc = policy.spawnnet_encoder();
  const int last = enc->num_adapters() - 1;
  const int source_layer = cfg.policy.encoder.adapters[std::size_t(last)].source_layer;

  // First pass: norm maps + global max for a stable color scale.
  std::vector<Tensor<float>> maps;
  float global_max = 1e-12f;
  for (int t = 0; t < traj.length(); ++t) {
    const Image& frame = traj.steps[std::size_t(t)].frames.at(0);
    const auto ext = provider.get(traj.steps[std::size_t(t)].frame_ids.at(0), frame);
    const DenseFeatureGrid& grid = ext.grids.at(source_layer);
    Tensor<float> gt({1, grid.c, grid.h, grid.w});
    grid_to_chw(grid, gt, 0);
    Tensor<float> nm = enc->adapter(last).norm_map(gt);
    for (float v : nm.data) global_max = std::max(global_max, v);
    maps.push_back(std::move(nm));
  }

  HeatmapStats stats;
  stats.steps = traj.length();
  double handle_sum = 0, image_sum = 0;
  std::int64_t handle_n = 0, image_n = 0;
  const bool have_global = !traj.views.empty() && traj.views[0] == "global";

  for (int t = 0; t < traj.length(); ++t) {
    const Tensor<float>& nm = maps[std::size_t(t)];
    Image heat(nm.dim(1), nm.dim(2), 1);
    for (std::size_t i = 0; i < heat.data.size(); ++i) heat.data[i] = nm.data[i] / global_max;
    const Image up = resize_bilinear(heat, Env::kImageSize, Env::kImageSize);

    const auto& step = traj.steps[std::size_t(t)];
    const Image& frame = step.frames.at(0);
    Image overlay(Env::kImageSize, Env::kImageSize, 3);
    for (int y = 0; y < Env::kImageSize; ++y)
      for (int x = 0; x < Env::kImageSize; ++x) {
        const float v = std::clamp(up.at(y, x, 0), 0.f, 1.f);
        const float a = 0.6f * v;
        overlay.at(y, x, 0) = (1 - a) * frame.at(y, x, 0) + a * 1.0f;
        overlay.at(y, x, 1) = (1 - a) * frame.at(y, x, 1) + a * 0.15f;
        overlay.at(y, x, 2) = (1 - a) * frame.at(y, x, 2) + a * 0.05f;
      }
    char name[64];
    std::snprintf(name, sizeof(name), "step_%04d.png", t);
    write_png((fs::path(heatmap_dir) / name).string(), overlay);

    if (have_global) {
      const auto hw = handle_world_of(traj.instance, step.obj_x, step.obj_y, step.obj_rot);
      const auto px = global_world_to_pixel(hw[0], hw[1]);
      const float radius = 12.f;
      for (int y = 0; y < Env::kImageSize; ++y)
        for (int x = 0; x < Env::kImageSize; ++x) {
          const float v = up.at(y, x, 0);
          image_sum += v;
          ++image_n;
          const float dy = float(y) - px[0], dx = float(x) - px[1];
          if (dy * dy + dx * dx <= radius * radius) {
            handle_sum += v;
            ++handle_n;
          }
        }
    }
  }
  if (handle_n > 0) stats.handle_region_mean = handle_sum / double(handle_n);
  if (image_n > 0) stats.image_mean = image_sum / double(image_n);

  json stats_json = {{"steps", stats.steps},
                     {"handle_region_mean", stats.handle_region_mean},
                     {"image_mean", stats.image_mean},
                     {"trajectory", traj_id}};
  write_text_atomic(fs::path(heatmap_dir) / "stats.json", stats_json.dump(2) + "\n");
  return stats;
}

}  // namespace spawnnet
