// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "spawnnet/errors.hpp"

namespace spawnnet {

namespace {
constexpr char kMagic[9] = "SPNCKPT1";

void write_u32(std::ofstream& f, std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }
std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, std::uint64_t config_hash,
                     const std::vector<nn::Parameter<float>*>& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("save_checkpoint: cannot open " + path);
  f.write(kMagic, 8);
  f.write(reinterpret_cast<const char*>(&config_hash), 8);
  write_u32(f, std::uint32_t(params.size()));
  for (const auto* p : params) {
    write_u32(f, std::uint32_t(p->name.size()));
    f.write(p->name.data(), std::streamsize(p->name.size()));
    write_u32(f, std::uint32_t(p->value.shape.size()));
    for (int d : p->value.shape) write_u32(f, std::uint32_t(d));
    f.write(reinterpret_cast<const char*>(p->value.ptr()),
            std::streamsize(p->value.numel() * sizeof(float)));
  }
  if (!f) throw Error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LookupError("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kMagic, 8) != 0)
    throw ConfigError("load_checkpoint: bad magic in " + path);
  Checkpoint ckpt;
  f.read(reinterpret_cast<char*>(&ckpt.config_hash), 8);
  const std::uint32_t count = read_u32(f);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const std::uint32_t ndim = read_u32(f);
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(int(read_u32(f)));
    Tensor<float> t(shape);
    f.read(reinterpret_cast<char*>(t.ptr()), std::streamsize(t.numel() * sizeof(float)));
    if (!f) throw ConfigError("load_checkpoint: truncated file " + path);
    ckpt.tensors[name] = std::move(t);
  }
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, const std::vector<nn::Parameter<float>*>& params,
                      std::uint64_t expected_hash) {
  if (ckpt.config_hash != expected_hash)
    throw StaleCacheError("checkpoint was saved under a different config hash");
  for (auto* p : params) {
    auto it = ckpt.tensors.find(p->name);
    if (it == ckpt.tensors.end())
      throw ConfigError("checkpoint missing parameter " + p->name);
    if (it->second.shape != p->value.shape)
      throw ConfigError("checkpoint parameter " + p->name + " has shape " +
                        it->second.shape_str() + ", expected " + p->value.shape_str());
    p->value = it->second;
  }
}

}  // namespace spawnnet
