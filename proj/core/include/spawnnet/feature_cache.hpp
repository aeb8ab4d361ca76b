// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spawnnet/backbone.hpp"
#include "spawnnet/errors.hpp"

namespace spawnnet {

/// On-disk layout: `manifest.txt` plus one raw little-endian float32 blob per
/// (image_id, layer) named `<image_id>.L<layer>.f32` (row-major H x W x C)
/// and one `<image_id>.cls.f32` per image. The manifest records the backbone
/// spec hash, the layer list and per-image grid dims; readers reject caches
/// whose spec hash differs from theirs.
struct CacheManifest {
  std::uint64_t spec_hash = 0;
  std::vector<int> layers;
  bool has_cls = true;
  int cls_dim = 0;
  struct GridDims {
    int h = 0, w = 0, c = 0;
  };
  std::map<std::string, GridDims> images;

  int count() const { return int(images.size()); }
};

class FeatureCacheWriter {
 public:
  FeatureCacheWriter(std::string dir, std::uint64_t spec_hash, std::vector<int> layers,
                     int cls_dim);

  /// Thread-safe for distinct image ids (single writer per id).
  void put(const std::string& image_id, const std::map<int, DenseFeatureGrid>& grids,
           const std::vector<float>& cls);

  /// Writes the manifest atomically (tmp file + rename).
  CacheManifest finalize();

 private:
  std::string dir_;
  CacheManifest manifest_;
};

class FeatureCacheReader {
 public:
  /// Throws LookupError when no manifest exists and StaleCacheError when
  /// `expected_spec_hash` does not match the manifest.
  FeatureCacheReader(std::string dir, std::uint64_t expected_spec_hash);

  DenseFeatureGrid read(const std::string& image_id, int layer) const;
  std::vector<float> read_cls(const std::string& image_id) const;
  bool contains(const std::string& image_id) const;

  const CacheManifest& manifest() const { return manifest_; }

 private:
  std::string dir_;
  CacheManifest manifest_;
};

/// Extracts dense grids + CLS for every (id, image) item and writes them to
/// `dir`. Items are processed in parallel; the manifest is written once at
/// the end. Returns the manifest.
CacheManifest build_cache(const VisionTransformer& backbone,
                          const std::vector<std::pair<std::string, Image>>& items,
                          const std::string& dir);

/// Streaming variant for datasets too large to hold as Images: `loader`
/// maps an image id to its Image.
CacheManifest build_cache(const VisionTransformer& backbone, const std::vector<std::string>& ids,
                          const std::function<Image(const std::string&)>& loader,
                          const std::string& dir);

DenseFeatureGrid read_cache(const std::string& dir, std::uint64_t expected_spec_hash,
                            const std::string& image_id, int layer);

}  // namespace spawnnet
