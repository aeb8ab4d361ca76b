// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/feature_cache.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include "spawnnet/errors.hpp"

namespace fs = std::filesystem;

namespace spawnnet {

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr const char* kManifestHeader = "spawnnet-feature-cache v1";

std::string blob_name(const std::string& image_id, int layer) {
  return image_id + ".L" + std::to_string(layer) + ".f32";
}

void write_blob(const fs::path& path, const float* data, std::size_t n) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("feature cache: cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(data), std::streamsize(n * sizeof(float)));
  if (!f) throw Error("feature cache: short write to " + path.string());
}

std::vector<float> read_blob(const fs::path& path, std::size_t expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LookupError("feature cache: missing blob " + path.string());
  std::vector<float> data(expected);
  f.read(reinterpret_cast<char*>(data.data()), std::streamsize(expected * sizeof(float)));
  if (std::size_t(f.gcount()) != expected * sizeof(float))
    throw StaleCacheError("feature cache: blob " + path.string() + " has unexpected size");
  return data;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

FeatureCacheWriter::FeatureCacheWriter(std::string dir, std::uint64_t spec_hash,
                                       std::vector<int> layers, int cls_dim)
    : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  manifest_.spec_hash = spec_hash;
  manifest_.layers = std::move(layers);
  manifest_.has_cls = cls_dim > 0;
  manifest_.cls_dim = cls_dim;
}

void FeatureCacheWriter::put(const std::string& image_id,
                             const std::map<int, DenseFeatureGrid>& grids,
                             const std::vector<float>& cls) {
  CacheManifest::GridDims dims;
  for (int layer : manifest_.layers) {
    auto it = grids.find(layer);
    if (it == grids.end())
      throw InputError("feature cache: grids for " + image_id + " missing layer " +
                       std::to_string(layer));
    const DenseFeatureGrid& g = it->second;
    dims = {g.h, g.w, g.c};
    write_blob(fs::path(dir_) / blob_name(image_id, layer), g.data.data(), g.data.size());
  }
  if (manifest_.has_cls) {
    if (int(cls.size()) != manifest_.cls_dim)
      throw InputError("feature cache: cls size mismatch for " + image_id);
    write_blob(fs::path(dir_) / (image_id + ".cls.f32"), cls.data(), cls.size());
  }
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  manifest_.images[image_id] = dims;
}

CacheManifest FeatureCacheWriter::finalize() {
  const fs::path tmp = fs::path(dir_) / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream f(tmp);
    if (!f) throw InputError("feature cache: cannot write manifest in " + dir_);
    f << kManifestHeader << "\n";
    f << "spec_hash=" << hex64(manifest_.spec_hash) << "\n";
    f << "layers=";
    for (std::size_t i = 0; i < manifest_.layers.size(); ++i)
      f << (i ? "," : "") << manifest_.layers[i];
    f << "\n";
    f << "cls_dim=" << manifest_.cls_dim << "\n";
    f << "count=" << manifest_.count() << "\n";
    for (const auto& [id, dims] : manifest_.images)
      f << id << " " << dims.h << " " << dims.w << " " << dims.c << "\n";
  }
  fs::rename(tmp, fs::path(dir_) / kManifestName);
  return manifest_;
}

FeatureCacheReader::FeatureCacheReader(std::string dir, std::uint64_t expected_spec_hash)
    : dir_(std::move(dir)) {
  std::ifstream f(fs::path(dir_) / kManifestName);
  if (!f) throw LookupError("feature cache: no manifest in " + dir_);
  std::string line;
  std::getline(f, line);
  if (line != kManifestHeader) throw StaleCacheError("feature cache: unknown manifest format");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
      if (key == "spec_hash") {
        manifest_.spec_hash = std::stoull(val, nullptr, 16);
      } else if (key == "layers") {
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) manifest_.layers.push_back(std::stoi(tok));
      } else if (key == "cls_dim") {
        manifest_.cls_dim = std::stoi(val);
        manifest_.has_cls = manifest_.cls_dim > 0;
      }
      // count is re-derived from the entries
    } else {
      std::stringstream ss(line);
      std::string id;
      CacheManifest::GridDims dims;
      ss >> id >> dims.h >> dims.w >> dims.c;
      if (!id.empty()) manifest_.images[id] = dims;
    }
  }
  if (manifest_.spec_hash != expected_spec_hash)
    throw StaleCacheError("feature cache in " + dir_ + " was built for a different backbone spec (" +
                          hex64(manifest_.spec_hash) + " vs expected " + hex64(expected_spec_hash) +
                          "); rebuild the cache");
}

bool FeatureCacheReader::contains(const std::string& image_id) const {
  return manifest_.images.count(image_id) > 0;
}

DenseFeatureGrid FeatureCacheReader::read(const std::string& image_id, int layer) const {
  auto it = manifest_.images.find(image_id);
  if (it == manifest_.images.end())
    throw LookupError("feature cache: image id not in cache: " + image_id);
  if (std::find(manifest_.layers.begin(), manifest_.layers.end(), layer) == manifest_.layers.end())
    throw LookupError("feature cache: layer " + std::to_string(layer) + " not cached");
  DenseFeatureGrid g;
  g.h = it->second.h;
  g.w = it->second.w;
  g.c = it->second.c;
  g.layer_index = layer;
  g.source_image_id = image_id;
  g.data = read_blob(fs::path(dir_) / blob_name(image_id, layer),
                     std::size_t(g.h) * g.w * g.c);
  return g;
}

std::vector<float> FeatureCacheReader::read_cls(const std::string& image_id) const {
  if (!manifest_.has_cls) throw LookupError("feature cache: no cls vectors cached");
  if (!contains(image_id)) throw LookupError("feature cache: image id not in cache: " + image_id);
  return read_blob(fs::path(dir_) / (image_id + ".cls.f32"), std::size_t(manifest_.cls_dim));
}

CacheManifest build_cache(const VisionTransformer& backbone,
                          const std::vector<std::pair<std::string, Image>>& items,
                          const std::string& dir) {
  std::vector<std::string> ids;
  ids.reserve(items.size());
  std::map<std::string, const Image*> by_id;
  for (const auto& [id, img] : items) {
    ids.push_back(id);
    by_id[id] = &img;
  }
  return build_cache(
      backbone, ids, [&by_id](const std::string& id) { return *by_id.at(id); }, dir);
}

CacheManifest build_cache(const VisionTransformer& backbone, const std::vector<std::string>& ids,
                          const std::function<Image(const std::string&)>& loader,
                          const std::string& dir) {
  FeatureCacheWriter writer(dir, backbone.spec().hash(), backbone.spec().extraction_layers,
                            backbone.spec().embed_dim);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < std::int64_t(ids.size()); ++i) {
    const std::string& id = ids[std::size_t(i)];
    const Image img = loader(id);
    const auto ext = backbone.extract_all(img, id);
    writer.put(id, ext.grids, ext.cls);
  }
  return writer.finalize();
}

DenseFeatureGrid read_cache(const std::string& dir, std::uint64_t expected_spec_hash,
                            const std::string& image_id, int layer) {
  FeatureCacheReader reader(dir, expected_spec_hash);
  return reader.read(image_id, layer);
}

}  // namespace spawnnet
