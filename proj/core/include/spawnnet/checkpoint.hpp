// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spawnnet/nn.hpp"

namespace spawnnet {

/// Flat map of named float tensors bound to a config hash. Frozen backbone
/// weights are never stored here.
struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::map<std::string, Tensor<float>> tensors;
};

void save_checkpoint(const std::string& path, std::uint64_t config_hash,
                     const std::vector<nn::Parameter<float>*>& params);

Checkpoint load_checkpoint(const std::string& path);

/// Copies the checkpoint tensors into `params` (matched by name). Throws
/// StaleCacheError on hash mismatch and ConfigError on missing/misshaped
/// entries.
void apply_checkpoint(const Checkpoint& ckpt, const std::vector<nn::Parameter<float>*>& params,
                      std::uint64_t expected_hash);

}  // namespace spawnnet
