// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0

#include "spawnnet/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "spawnnet/errors.hpp"
#include "spawnnet/nn.hpp"
#include "spawnnet/rng.hpp"

namespace spawnnet {

namespace {

constexpr float kLayerNormEps = 1e-6f;

void layer_norm_rows(Eigen::MatrixXf& m, const Eigen::VectorXf& gamma,
                     const Eigen::VectorXf& beta) {
  const int cols = int(m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    float mean = m.row(r).mean();
    float var = 0.f;
    for (int c = 0; c < cols; ++c) {
      const float d = m(r, c) - mean;
      var += d * d;
    }
    var /= float(cols);
    const float inv = 1.f / std::sqrt(var + kLayerNormEps);
    for (int c = 0; c < cols; ++c) m(r, c) = (m(r, c) - mean) * inv * gamma(c) + beta(c);
  }
}

float gelu(float x) { return 0.5f * x * (1.f + std::erff(x * 0.70710678118654752f)); }

void softmax_rows(Eigen::MatrixXf& m) {
  for (int r = 0; r < m.rows(); ++r) {
    const float mx = m.row(r).maxCoeff();
    float sum = 0.f;
    for (int c = 0; c < m.cols(); ++c) {
      const float e = std::exp(m(r, c) - mx);
      m(r, c) = e;
      sum += e;
    }
    m.row(r) /= sum;
  }
}

void checksum_bytes(std::uint64_t& h, const float* p, std::size_t n) {
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < n * sizeof(float); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
}

void random_matrix(Eigen::MatrixXf& m, Rng& rng, double stddev = 0.02) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = float(rng.normal(0.0, stddev));
}

void random_vector(Eigen::VectorXf& v, Rng& rng, double stddev = 0.02) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = float(rng.normal(0.0, stddev));
}

}  // namespace

std::string to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::key: return "key";
    case DescriptorKind::query: return "query";
    case DescriptorKind::value: return "value";
    case DescriptorKind::token: return "token";
  }
  return "key";
}

DescriptorKind descriptor_kind_from_string(const std::string& s) {
  if (s == "key") return DescriptorKind::key;
  if (s == "query") return DescriptorKind::query;
  if (s == "value") return DescriptorKind::value;
  if (s == "token") return DescriptorKind::token;
  throw ConfigError("unknown descriptor kind: " + s);
}

void BackboneSpec::validate() const {
  if (patch_size < 1 || stride < 1) throw ConfigError("backbone: patch_size/stride must be >= 1");
  if (embed_dim < 1 || num_layers < 1) throw ConfigError("backbone: bad embed_dim/num_layers");
  if (num_heads < 1 || embed_dim % num_heads != 0)
    throw ConfigError("backbone: embed_dim must be divisible by num_heads");
  if (extraction_layers.empty()) throw ConfigError("backbone: extraction_layers is empty");
  int prev = 0;
  for (int l : extraction_layers) {
    if (l < 1 || l > num_layers)
      throw ConfigError("backbone: extraction layer " + std::to_string(l) + " out of range [1," +
                        std::to_string(num_layers) + "]");
    if (l <= prev) throw ConfigError("backbone: extraction_layers must be strictly increasing");
    prev = l;
  }
  if (!frozen) throw ConfigError("backbone: frozen must be true");
  if (grid_dim(base_image_size) < 1) throw ConfigError("backbone: base_image_size below one patch");
}

std::uint64_t BackboneSpec::hash() const {
  std::string repr = model_id + "|p" + std::to_string(patch_size) + "|s" + std::to_string(stride) +
                     "|c" + std::to_string(embed_dim) + "|L" + std::to_string(num_layers) + "|h" +
                     std::to_string(num_heads) + "|m" + std::to_string(mlp_hidden()) + "|d" +
                     to_string(descriptor) + "|b" + std::to_string(base_image_size) + "|x";
  for (int l : extraction_layers) repr += std::to_string(l) + ",";
  return fnv1a64(repr);
}

Eigen::MatrixXf AttentionInternals::attention_weights(int head) const {
  Eigen::MatrixXf scores =
      q[std::size_t(head)] * k[std::size_t(head)].transpose() / std::sqrt(float(head_dim));
  softmax_rows(scores);
  return scores;
}

VisionTransformer::VisionTransformer(BackboneSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const int c = spec_.embed_dim;
  const int hidden = spec_.mlp_hidden();
  const int base_grid = spec_.grid_dim(spec_.base_image_size);
  const int base_n = base_grid * base_grid;

  if (spec_.model_id.rfind("random:", 0) == 0) {
    const std::uint64_t seed = std::stoull(spec_.model_id.substr(7));
    Rng rng(splitmix64(seed ^ 0x5a7b9e1dull));
    w_.patch_w.resize(c, 3 * spec_.patch_size * spec_.patch_size);
    random_matrix(w_.patch_w, rng);
    w_.patch_b = Eigen::VectorXf::Zero(c);
    w_.cls_token.resize(c);
    random_vector(w_.cls_token, rng);
    w_.pos_embed.resize(base_n + 1, c);
    random_matrix(w_.pos_embed, rng);
    w_.blocks.resize(std::size_t(spec_.num_layers));
    for (auto& blk : w_.blocks) {
      blk.ln1_g = Eigen::VectorXf::Ones(c);
      blk.ln1_b = Eigen::VectorXf::Zero(c);
      blk.ln2_g = Eigen::VectorXf::Ones(c);
      blk.ln2_b = Eigen::VectorXf::Zero(c);
      blk.qkv_w.resize(3 * c, c);
      random_matrix(blk.qkv_w, rng);
      blk.qkv_b = Eigen::VectorXf::Zero(3 * c);
      blk.proj_w.resize(c, c);
      random_matrix(blk.proj_w, rng);
      blk.proj_b = Eigen::VectorXf::Zero(c);
      blk.fc1_w.resize(hidden, c);
      random_matrix(blk.fc1_w, rng);
      blk.fc1_b = Eigen::VectorXf::Zero(hidden);
      blk.fc2_w.resize(c, hidden);
      random_matrix(blk.fc2_w, rng);
      blk.fc2_b = Eigen::VectorXf::Zero(c);
    }
    w_.ln_f_g = Eigen::VectorXf::Ones(c);
    w_.ln_f_b = Eigen::VectorXf::Zero(c);
  } else {
    w_ = load_vit_weights(spec_.model_id, spec_);
  }
}

TokenSequence VisionTransformer::patchify(const Image& rgb) const {
  if (rgb.c != 3) throw InputError("patchify: expected a 3-channel image");
  const int gh = spec_.grid_dim(rgb.h), gw = spec_.grid_dim(rgb.w);
  if (gh < 1 || gw < 1)
    throw DimensionError("patchify: image " + std::to_string(rgb.h) + "x" + std::to_string(rgb.w) +
                         " smaller than one " + std::to_string(spec_.patch_size) + "x" +
                         std::to_string(spec_.patch_size) + " patch");
  const int p = spec_.patch_size, c = spec_.embed_dim;
  const int n = gh * gw;

  // Patch pixels are flattened [channel][py][px] after per-channel
  // normalization, then projected by the patch embedding.
  Eigen::MatrixXf patches(n, 3 * p * p);
  for (int gy = 0; gy < gh; ++gy) {
    for (int gx = 0; gx < gw; ++gx) {
      const int y0 = gy * spec_.stride, x0 = gx * spec_.stride;
      int idx = 0;
      for (int ch = 0; ch < 3; ++ch) {
        const float mean = spec_.norm_mean[std::size_t(ch)], stdv = spec_.norm_std[std::size_t(ch)];
        for (int py = 0; py < p; ++py)
          for (int px = 0; px < p; ++px)
            patches(gy * gw + gx, idx++) = (rgb.at(y0 + py, x0 + px, ch) - mean) / stdv;
      }
    }
  }

  TokenSequence seq;
  seq.grid_h = gh;
  seq.grid_w = gw;
  seq.layer_index = 0;
  seq.tokens.resize(n + 1, c);
  seq.tokens.row(0) = w_.cls_token.transpose();
  seq.tokens.bottomRows(n).noalias() = patches * w_.patch_w.transpose();
  for (int i = 1; i <= n; ++i) seq.tokens.row(i) += w_.patch_b.transpose();
  seq.tokens += position_embedding(gh, gw);
  return seq;
}

Eigen::MatrixXf VisionTransformer::position_embedding(int grid_h, int grid_w) const {
  const int base_grid = spec_.grid_dim(spec_.base_image_size);
  const int c = spec_.embed_dim;
  Eigen::MatrixXf pos(grid_h * grid_w + 1, c);
  pos.row(0) = w_.pos_embed.row(0);
  if (grid_h == base_grid && grid_w == base_grid) {
    pos.bottomRows(grid_h * grid_w) = w_.pos_embed.bottomRows(base_grid * base_grid);
    return pos;
  }
  // Bilinearly resample the patch position grid for other resolutions.
  const nn::BilinearAxis ay = nn::bilinear_axis(base_grid, grid_h);
  const nn::BilinearAxis ax = nn::bilinear_axis(base_grid, grid_w);
  for (int y = 0; y < grid_h; ++y) {
    for (int x = 0; x < grid_w; ++x) {
      const Eigen::RowVectorXf v00 = w_.pos_embed.row(1 + ay.i0[y] * base_grid + ax.i0[x]);
      const Eigen::RowVectorXf v01 = w_.pos_embed.row(1 + ay.i0[y] * base_grid + ax.i1[x]);
      const Eigen::RowVectorXf v10 = w_.pos_embed.row(1 + ay.i1[y] * base_grid + ax.i0[x]);
      const Eigen::RowVectorXf v11 = w_.pos_embed.row(1 + ay.i1[y] * base_grid + ax.i1[x]);
      const Eigen::RowVectorXf top = v00 + (v01 - v00) * ax.t[x];
      const Eigen::RowVectorXf bot = v10 + (v11 - v10) * ax.t[x];
      pos.row(1 + y * grid_w + x) = top + (bot - top) * ay.t[y];
    }
  }
  return pos;
}

std::map<int, AttentionInternals> VisionTransformer::forward_with_internals(
    const TokenSequence& input, const std::vector<int>& layers, TokenSequence* final_tokens,
    std::map<int, Eigen::MatrixXf>* layer_outputs) const {
  for (int l : layers)
    if (l < 1 || l > spec_.num_layers)
      throw ConfigError("forward_with_internals: layer " + std::to_string(l) +
                        " out of range [1," + std::to_string(spec_.num_layers) + "]");

  const int c = spec_.embed_dim;
  const int heads = spec_.num_heads;
  const int dh = spec_.head_dim();
  const float inv_sqrt_d = 1.f / std::sqrt(float(dh));

  std::map<int, AttentionInternals> out;
  Eigen::MatrixXf x = input.tokens;
  const int rows = int(x.rows());

  for (int layer = 1; layer <= spec_.num_layers; ++layer) {
    const ViTBlockWeights& blk = w_.blocks[std::size_t(layer - 1)];

    Eigen::MatrixXf xn = x;
    layer_norm_rows(xn, blk.ln1_g, blk.ln1_b);
    Eigen::MatrixXf qkv = xn * blk.qkv_w.transpose();
    qkv.rowwise() += blk.qkv_b.transpose();

    const bool capture = std::find(layers.begin(), layers.end(), layer) != layers.end();
    AttentionInternals* internals = nullptr;
    if (capture) {
      AttentionInternals ai;
      ai.head_dim = dh;
      ai.x = xn;
      ai.q.resize(std::size_t(heads));
      ai.k.resize(std::size_t(heads));
      ai.v.resize(std::size_t(heads));
      internals = &(out[layer] = std::move(ai));
    }

    Eigen::MatrixXf attn_out(rows, c);
    for (int h = 0; h < heads; ++h) {
      const Eigen::MatrixXf qh = qkv.middleCols(h * dh, dh);
      const Eigen::MatrixXf kh = qkv.middleCols(c + h * dh, dh);
      const Eigen::MatrixXf vh = qkv.middleCols(2 * c + h * dh, dh);
      if (internals) {
        internals->q[std::size_t(h)] = qh;
        internals->k[std::size_t(h)] = kh;
        internals->v[std::size_t(h)] = vh;
      }
      Eigen::MatrixXf scores = qh * kh.transpose() * inv_sqrt_d;
      softmax_rows(scores);
      attn_out.middleCols(h * dh, dh).noalias() = scores * vh;
    }
    x.noalias() += (attn_out * blk.proj_w.transpose()).rowwise() + blk.proj_b.transpose();

    Eigen::MatrixXf yn = x;
    layer_norm_rows(yn, blk.ln2_g, blk.ln2_b);
    Eigen::MatrixXf h1 = yn * blk.fc1_w.transpose();
    h1.rowwise() += blk.fc1_b.transpose();
    for (Eigen::Index i = 0; i < h1.size(); ++i) h1.data()[i] = gelu(h1.data()[i]);
    x.noalias() += (h1 * blk.fc2_w.transpose()).rowwise() + blk.fc2_b.transpose();

    if (capture && layer_outputs) (*layer_outputs)[layer] = x;
  }

  if (final_tokens) {
    layer_norm_rows(x, w_.ln_f_g, w_.ln_f_b);
    final_tokens->tokens = std::move(x);
    final_tokens->grid_h = input.grid_h;
    final_tokens->grid_w = input.grid_w;
    final_tokens->layer_index = spec_.num_layers;
  }
  return out;
}

std::map<int, DenseFeatureGrid> VisionTransformer::extract_dense(
    const Image& rgb, const std::string& image_id) const {
  return extract_grids(rgb, image_id, nullptr);
}

std::map<int, DenseFeatureGrid> VisionTransformer::extract_grids(
    const Image& rgb, const std::string& image_id, TokenSequence* final_tokens) const {
  const TokenSequence seq = patchify(rgb);
  std::map<int, Eigen::MatrixXf> layer_outputs;
  const bool want_tokens = spec_.descriptor == DescriptorKind::token;
  const auto internals = forward_with_internals(seq, spec_.extraction_layers, final_tokens,
                                                want_tokens ? &layer_outputs : nullptr);
  const int n = seq.patch_count();
  const int c = spec_.embed_dim;
  const int dh = spec_.head_dim();
  const int heads = spec_.num_heads;

  std::map<int, DenseFeatureGrid> grids;
  for (const auto& [layer, ai] : internals) {
    DenseFeatureGrid g;
    g.h = seq.grid_h;
    g.w = seq.grid_w;
    g.c = c;
    g.layer_index = layer;
    g.kind = spec_.descriptor;
    g.source_image_id = image_id;
    g.data.resize(std::size_t(n) * c);
    // Patch token i sits at grid position (i / W, i % W); per-head vectors
    // are concatenated head-major. CLS (row 0) is excluded.
    for (int i = 0; i < n; ++i) {
      float* dst = g.data.data() + std::size_t(i) * c;
      if (spec_.descriptor == DescriptorKind::token) {
        const Eigen::MatrixXf& toks = layer_outputs.at(layer);
        for (int ch = 0; ch < c; ++ch) dst[ch] = toks(i + 1, ch);
      } else {
        const auto& mats = spec_.descriptor == DescriptorKind::key     ? ai.k
                           : spec_.descriptor == DescriptorKind::query ? ai.q
                                                                       : ai.v;
        for (int h = 0; h < heads; ++h)
          for (int d = 0; d < dh; ++d) dst[h * dh + d] = mats[std::size_t(h)](i + 1, d);
      }
    }
    grids[layer] = std::move(g);
  }
  return grids;
}

std::vector<float> VisionTransformer::extract_cls(const Image& rgb) const {
  const TokenSequence seq = patchify(rgb);
  TokenSequence final_seq;
  forward_with_internals(seq, {}, &final_seq);
  std::vector<float> cls(std::size_t(spec_.embed_dim));
  for (int i = 0; i < spec_.embed_dim; ++i) cls[std::size_t(i)] = final_seq.tokens(0, i);
  return cls;
}

VisionTransformer::DenseExtraction VisionTransformer::extract_all(
    const Image& rgb, const std::string& image_id) const {
  DenseExtraction out;
  TokenSequence final_seq;
  out.grids = extract_grids(rgb, image_id, &final_seq);
  out.cls.resize(std::size_t(spec_.embed_dim));
  for (int i = 0; i < spec_.embed_dim; ++i) out.cls[std::size_t(i)] = final_seq.tokens(0, i);
  return out;
}

std::uint64_t VisionTransformer::weight_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto add_m = [&h](const Eigen::MatrixXf& m) { checksum_bytes(h, m.data(), std::size_t(m.size())); };
  auto add_v = [&h](const Eigen::VectorXf& v) { checksum_bytes(h, v.data(), std::size_t(v.size())); };
  add_m(w_.patch_w);
  add_v(w_.patch_b);
  add_v(w_.cls_token);
  add_m(w_.pos_embed);
  for (const auto& blk : w_.blocks) {
    add_v(blk.ln1_g);
    add_v(blk.ln1_b);
    add_m(blk.qkv_w);
    add_v(blk.qkv_b);
    add_m(blk.proj_w);
    add_v(blk.proj_b);
    add_v(blk.ln2_g);
    add_v(blk.ln2_b);
    add_m(blk.fc1_w);
    add_v(blk.fc1_b);
    add_m(blk.fc2_w);
    add_v(blk.fc2_b);
  }
  add_v(w_.ln_f_g);
  add_v(w_.ln_f_b);
  return h;
}

std::size_t VisionTransformer::param_count() const {
  std::size_t n = std::size_t(w_.patch_w.size()) + w_.patch_b.size() + w_.cls_token.size() +
                  w_.pos_embed.size() + w_.ln_f_g.size() + w_.ln_f_b.size();
  for (const auto& blk : w_.blocks)
    n += std::size_t(blk.ln1_g.size()) + blk.ln1_b.size() + blk.qkv_w.size() + blk.qkv_b.size() +
         blk.proj_w.size() + blk.proj_b.size() + blk.ln2_g.size() + blk.ln2_b.size() +
         blk.fc1_w.size() + blk.fc1_b.size() + blk.fc2_w.size() + blk.fc2_b.size();
  return n;
}

// ---------------------------------------------------------------------------
// Weight file IO. Binary little-endian: magic "SPNVIT01", u32 entry count,
// then per entry u32 name length, name bytes, u32 ndim, u32 dims, f32 data
// (row-major).

namespace {

constexpr char kWeightMagic[9] = "SPNVIT01";

void write_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::ifstream& f) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

void write_entry(std::ofstream& f, const std::string& name, const float* data,
                 std::vector<std::uint32_t> dims) {
  write_u32(f, std::uint32_t(name.size()));
  f.write(name.data(), std::streamsize(name.size()));
  write_u32(f, std::uint32_t(dims.size()));
  std::size_t n = 1;
  for (std::uint32_t d : dims) {
    write_u32(f, d);
    n *= d;
  }
  f.write(reinterpret_cast<const char*>(data), std::streamsize(n * sizeof(float)));
}

// Eigen matrices are column-major; serialize row-major for a layout-neutral
// file. Row-major entry (r,c) is at r*cols + c.
void write_matrix(std::ofstream& f, const std::string& name, const Eigen::MatrixXf& m) {
  std::vector<float> buf(std::size_t(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      buf[std::size_t(r) * std::size_t(m.cols()) + std::size_t(c)] = m(r, c);
  write_entry(f, name, buf.data(), {std::uint32_t(m.rows()), std::uint32_t(m.cols())});
}

void write_vector(std::ofstream& f, const std::string& name, const Eigen::VectorXf& v) {
  write_entry(f, name, v.data(), {std::uint32_t(v.size())});
}

struct RawEntry {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

Eigen::MatrixXf to_matrix(const RawEntry& e, const std::string& name) {
  if (e.dims.size() != 2) throw ConfigError("weight entry " + name + " is not a matrix");
  Eigen::MatrixXf m(e.dims[0], e.dims[1]);
  for (std::uint32_t r = 0; r < e.dims[0]; ++r)
    for (std::uint32_t c = 0; c < e.dims[1]; ++c)
      m(r, c) = e.data[std::size_t(r) * e.dims[1] + c];
  return m;
}

Eigen::VectorXf to_vector(const RawEntry& e, const std::string& name) {
  if (e.dims.size() != 1) throw ConfigError("weight entry " + name + " is not a vector");
  Eigen::VectorXf v(e.dims[0]);
  std::copy(e.data.begin(), e.data.end(), v.data());
  return v;
}

}  // namespace

void save_vit_weights(const std::string& path, const BackboneSpec& spec, const ViTWeights& w) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("save_vit_weights: cannot open " + path);
  f.write(kWeightMagic, 8);
  const std::uint32_t entries = 4 + 12 * std::uint32_t(spec.num_layers) + 2;
  write_u32(f, entries);
  write_matrix(f, "patch_embed.weight", w.patch_w);
  write_vector(f, "patch_embed.bias", w.patch_b);
  write_vector(f, "cls_token", w.cls_token);
  write_matrix(f, "pos_embed", w.pos_embed);
  for (int i = 0; i < spec.num_layers; ++i) {
    const auto& blk = w.blocks[std::size_t(i)];
    const std::string p = "blocks." + std::to_string(i) + ".";
    write_vector(f, p + "ln1.weight", blk.ln1_g);
    write_vector(f, p + "ln1.bias", blk.ln1_b);
    write_matrix(f, p + "qkv.weight", blk.qkv_w);
    write_vector(f, p + "qkv.bias", blk.qkv_b);
    write_matrix(f, p + "proj.weight", blk.proj_w);
    write_vector(f, p + "proj.bias", blk.proj_b);
    write_vector(f, p + "ln2.weight", blk.ln2_g);
    write_vector(f, p + "ln2.bias", blk.ln2_b);
    write_matrix(f, p + "mlp.fc1.weight", blk.fc1_w);
    write_vector(f, p + "mlp.fc1.bias", blk.fc1_b);
    write_matrix(f, p + "mlp.fc2.weight", blk.fc2_w);
    write_vector(f, p + "mlp.fc2.bias", blk.fc2_b);
  }
  write_vector(f, "norm.weight", w.ln_f_g);
  write_vector(f, "norm.bias", w.ln_f_b);
  if (!f) throw Error("save_vit_weights: write failed for " + path);
}

ViTWeights load_vit_weights(const std::string& path, const BackboneSpec& spec) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("backbone weights not found: " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kWeightMagic, 8) != 0)
    throw ConfigError("bad weight file magic in " + path);
  const std::uint32_t entries = read_u32(f);
  std::map<std::string, RawEntry> raw;
  for (std::uint32_t i = 0; i < entries; ++i) {
    const std::uint32_t name_len = read_u32(f);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    RawEntry e;
    const std::uint32_t ndim = read_u32(f);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      e.dims.push_back(read_u32(f));
      n *= e.dims.back();
    }
    e.data.resize(n);
    f.read(reinterpret_cast<char*>(e.data.data()), std::streamsize(n * sizeof(float)));
    if (!f) throw ConfigError("truncated weight file: " + path);
    raw[name] = std::move(e);
  }

  auto get = [&raw, &path](const std::string& name) -> const RawEntry& {
    auto it = raw.find(name);
    if (it == raw.end()) throw ConfigError("weight file " + path + " missing entry " + name);
    return it->second;
  };

  ViTWeights w;
  w.patch_w = to_matrix(get("patch_embed.weight"), "patch_embed.weight");
  if (w.patch_w.rows() != spec.embed_dim ||
      w.patch_w.cols() != 3 * spec.patch_size * spec.patch_size)
    throw ConfigError("patch_embed.weight shape mismatch with backbone spec");
  w.patch_b = to_vector(get("patch_embed.bias"), "patch_embed.bias");
  w.cls_token = to_vector(get("cls_token"), "cls_token");
  w.pos_embed = to_matrix(get("pos_embed"), "pos_embed");
  const int base_grid = spec.grid_dim(spec.base_image_size);
  if (w.pos_embed.rows() != base_grid * base_grid + 1)
    throw ConfigError("pos_embed rows mismatch with base_image_size grid");
  w.blocks.resize(std::size_t(spec.num_layers));
  for (int i = 0; i < spec.num_layers; ++i) {
    auto& blk = w.blocks[std::size_t(i)];
    const std::string p = "blocks." + std::to_string(i) + ".";
    blk.ln1_g = to_vector(get(p + "ln1.weight"), p + "ln1.weight");
    blk.ln1_b = to_vector(get(p + "ln1.bias"), p + "ln1.bias");
    blk.qkv_w = to_matrix(get(p + "qkv.weight"), p + "qkv.weight");
    blk.qkv_b = to_vector(get(p + "qkv.bias"), p + "qkv.bias");
    blk.proj_w = to_matrix(get(p + "proj.weight"), p + "proj.weight");
    blk.proj_b = to_vector(get(p + "proj.bias"), p + "proj.bias");
    blk.ln2_g = to_vector(get(p + "ln2.weight"), p + "ln2.weight");
    blk.ln2_b = to_vector(get(p + "ln2.bias"), p + "ln2.bias");
    blk.fc1_w = to_matrix(get(p + "mlp.fc1.weight"), p + "mlp.fc1.weight");
    blk.fc1_b = to_vector(get(p + "mlp.fc1.bias"), p + "mlp.fc1.bias");
    blk.fc2_w = to_matrix(get(p + "mlp.fc2.weight"), p + "mlp.fc2.weight");
    blk.fc2_b = to_vector(get(p + "mlp.fc2.bias"), p + "mlp.fc2.bias");
    if (blk.qkv_w.rows() != 3 * spec.embed_dim || blk.qkv_w.cols() != spec.embed_dim)
      throw ConfigError("qkv weight shape mismatch in block " + std::to_string(i));
  }
  w.ln_f_g = to_vector(get("norm.weight"), "norm.weight");
  w.ln_f_b = to_vector(get("norm.bias"), "norm.bias");
  return w;
}

}  // namespace spawnnet
