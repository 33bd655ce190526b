// Copyright 2026 The Cribtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cribtag/model.hpp"

#include <algorithm>
#include <cmath>

#include "cribtag/error.hpp"
#include "cribtag/ops.hpp"
#include "cribtag/random.hpp"

namespace cribtag {

namespace {

constexpr double kInitStd = 0.02;
constexpr double kNormEps = 1e-6;

std::string block(std::size_t i) { return "blocks." + std::to_string(i) + "."; }

}  // namespace

PatchGrid patch_grid(std::size_t n_mels, std::size_t n_frames, std::size_t patch, std::size_t stride) {
  if (patch == 0 || stride == 0) throw ConfigError("patch and stride must be positive");
  PatchGrid g;
  g.freq = n_mels < patch ? 0 : (n_mels - patch) / stride + 1;
  g.time = n_frames < patch ? 0 : (n_frames - patch) / stride + 1;
  return g;
}

void ModelConfig::validate() const {
  if (embed_dim == 0 || n_heads == 0 || embed_dim % n_heads != 0) {
    throw ConfigError("model: embed_dim " + std::to_string(embed_dim) + " must be a positive multiple of n_heads " +
                      std::to_string(n_heads));
  }
  if (n_layers == 0) throw ConfigError("model: n_layers must be positive");
  if (mlp_ratio == 0) throw ConfigError("model: mlp_ratio must be positive");
  if (patch == 0 || overlap >= patch) {
    throw ConfigError("model: need overlap < patch (stride >= 1), got patch " + std::to_string(patch) +
                      " overlap " + std::to_string(overlap));
  }
  if (n_mels < patch || n_frames < patch) {
    throw ConfigError("model: input " + std::to_string(n_mels) + "x" + std::to_string(n_frames) +
                      " is smaller than one patch");
  }
  if (n_classes == 0) throw ConfigError("model: n_classes must be positive");
  for (auto h : head_dims) {
    if (h == 0) throw ConfigError("model: head dimensions must be positive");
  }
}

ModelConfig ModelConfig::base() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.embed_dim = 96;
  c.n_layers = 3;
  c.n_heads = 3;
  c.head_dims = {192, 96};
  return c;
}

ModelConfig model_preset(std::string_view name) {
  if (name == "base") return ModelConfig::base();
  if (name == "tiny") return ModelConfig::tiny();
  throw ConfigError("unknown model preset '" + std::string(name) + "' (expected base or tiny)");
}

template <typename T>
Tensor<T> extract_patches(const LogMelSpectrogram& s, const ModelConfig& cfg) {
  if (s.n_frames < cfg.patch) {
    throw ContractError("spectrogram has " + std::to_string(s.n_frames) + " frames, fewer than patch size " +
                        std::to_string(cfg.patch));
  }
  if (s.n_mels < cfg.patch) throw ContractError("spectrogram has fewer mel bins than the patch size");
  const std::size_t stride = cfg.stride();
  const PatchGrid g = patch_grid(s.n_mels, s.n_frames, cfg.patch, stride);
  const std::size_t pd = cfg.patch_dim();
  std::vector<T> out(g.count() * pd);
  for (std::size_t t = 0; t < g.time; ++t) {
    for (std::size_t f = 0; f < g.freq; ++f) {
      T* dst = out.data() + (t * g.freq + f) * pd;
      for (std::size_t i = 0; i < cfg.patch; ++i) {
        const float* src = s.values.data() + (f * stride + i) * s.n_frames + t * stride;
        for (std::size_t j = 0; j < cfg.patch; ++j) dst[i * cfg.patch + j] = static_cast<T>(src[j]);
      }
    }
  }
  return Tensor<T>(Shape{g.count(), pd}, std::move(out));
}

template <typename T>
Model<T>::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t d = config_.embed_dim;
  const std::size_t hidden = d * config_.mlp_ratio;
  add_param("patch_embed.weight", ParamKind::kWeight, {config_.patch_dim(), d});
  add_param("patch_embed.bias", ParamKind::kBias, {d});
  add_param("cls_token", ParamKind::kEmbedding, {1, d});
  add_param("pos_embed", ParamKind::kEmbedding, {config_.n_tokens(), d});
  for (std::size_t i = 0; i < config_.n_layers; ++i) {
    const auto b = block(i);
    add_param(b + "norm1.weight", ParamKind::kNormGain, {d});
    add_param(b + "norm1.bias", ParamKind::kNormShift, {d});
    add_param(b + "attn.qkv.weight", ParamKind::kWeight, {d, 3 * d});
    add_param(b + "attn.qkv.bias", ParamKind::kBias, {3 * d});
    add_param(b + "attn.proj.weight", ParamKind::kWeight, {d, d});
    add_param(b + "attn.proj.bias", ParamKind::kBias, {d});
    add_param(b + "norm2.weight", ParamKind::kNormGain, {d});
    add_param(b + "norm2.bias", ParamKind::kNormShift, {d});
    add_param(b + "mlp.fc1.weight", ParamKind::kWeight, {d, hidden});
    add_param(b + "mlp.fc1.bias", ParamKind::kBias, {hidden});
    add_param(b + "mlp.fc2.weight", ParamKind::kWeight, {hidden, d});
    add_param(b + "mlp.fc2.bias", ParamKind::kBias, {d});
  }
  add_param("norm.weight", ParamKind::kNormGain, {d});
  add_param("norm.bias", ParamKind::kNormShift, {d});
  std::size_t in = d;
  for (std::size_t k = 0; k < config_.head_dims.size(); ++k) {
    const auto fc = "head.fc" + std::to_string(k + 1);
    const auto ln = "head.norm" + std::to_string(k + 1);
    const std::size_t out = config_.head_dims[k];
    add_param(fc + ".weight", ParamKind::kWeight, {in, out});
    add_param(fc + ".bias", ParamKind::kBias, {out});
    add_param(ln + ".weight", ParamKind::kNormGain, {out});
    add_param(ln + ".bias", ParamKind::kNormShift, {out});
    in = out;
  }
  add_param("head.out.weight", ParamKind::kWeight, {in, config_.n_classes});
  add_param("head.out.bias", ParamKind::kBias, {config_.n_classes});
}

template <typename T>
void Model<T>::add_param(std::string name, ParamKind kind, Shape shape) {
  Tensor<T> t = kind == ParamKind::kNormGain ? Tensor<T>::full(std::move(shape), T(1))
                                             : Tensor<T>::zeros(std::move(shape));
  params_.push_back({std::move(name), kind, std::move(t)});
}

template <typename T>
bool Model<T>::has(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p.name == name; });
}

template <typename T>
Tensor<T>& Model<T>::param(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw ConfigError("model has no parameter '" + std::string(name) + "'");
}

template <typename T>
const Tensor<T>& Model<T>::param(std::string_view name) const {
  return const_cast<Model*>(this)->param(name);
}

template <typename T>
std::size_t Model<T>::size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
Shape Model<T>::expected_shape(std::string_view name) const {
  return param(name).shape();
}

template <typename T>
void Model<T>::init(std::uint64_t seed) {
  Rng rng(mix64(seed));
  for (auto& p : params_) {
    auto data = p.value.data();
    switch (p.kind) {
      case ParamKind::kWeight:
      case ParamKind::kEmbedding:
        for (auto& v : data) {
          double z = standard_normal(rng);
          while (std::abs(z) > 2.0) z = standard_normal(rng);
          v = static_cast<T>(kInitStd * z);
        }
        break;
      case ParamKind::kNormGain:
        std::fill(data.begin(), data.end(), T(1));
        break;
      case ParamKind::kBias:
      case ParamKind::kNormShift:
        std::fill(data.begin(), data.end(), T(0));
        break;
    }
  }
}

template <typename T>
Tensor<T> Model<T>::linear(const Tensor<T>& x, const std::string& prefix) const {
  return add(matmul(x, param(prefix + ".weight")), param(prefix + ".bias"));
}

template <typename T>
Tensor<T> Model<T>::norm(const Tensor<T>& x, const std::string& prefix) const {
  return layer_norm(x, param(prefix + ".weight"), param(prefix + ".bias"), T(kNormEps));
}

template <typename T>
Tensor<T> Model<T>::forward_patches(const Tensor<T>& patches, ForwardTrace<T>* trace) const {
  const PatchGrid g = config_.grid();
  if (patches.rank() != 2 || patches.dim(0) != g.count() || patches.dim(1) != config_.patch_dim()) {
    throw ShapeError("model expects patches [" + std::to_string(g.count()) + ", " +
                     std::to_string(config_.patch_dim()) + "], got " + shape_string(patches.shape()));
  }
  const std::size_t d = config_.embed_dim;
  const std::size_t dh = d / config_.n_heads;
  const T att_scale = T(1) / std::sqrt(static_cast<T>(dh));

  Tensor<T> x = linear(patches, "patch_embed");
  x = concat<T>({param("cls_token"), x}, 0);
  x = add(x, param("pos_embed"));

  for (std::size_t i = 0; i < config_.n_layers; ++i) {
    const auto b = block(i);
    const Tensor<T> qkv = linear(norm(x, b + "norm1"), b + "attn.qkv");
    std::vector<Tensor<T>> heads;
    heads.reserve(config_.n_heads);
    for (std::size_t h = 0; h < config_.n_heads; ++h) {
      const auto q = slice(qkv, 1, h * dh, dh);
      const auto k = slice(qkv, 1, d + h * dh, dh);
      const auto v = slice(qkv, 1, 2 * d + h * dh, dh);
      const auto a = softmax(scale(matmul(q, transpose(k)), att_scale), 1);
      if (trace) trace->attention.push_back(a);
      heads.push_back(matmul(a, v));
    }
    const Tensor<T> attn = config_.n_heads == 1 ? heads.front() : concat(heads, 1);
    x = add(x, linear(attn, b + "attn.proj"));
    const Tensor<T> hid = gelu(linear(norm(x, b + "norm2"), b + "mlp.fc1"));
    x = add(x, linear(hid, b + "mlp.fc2"));
  }
  x = norm(x, "norm");

  Tensor<T> h = config_.pooling == Pooling::kCls ? slice(x, 0, 0, 1) : reshape(mean(x, 0), {1, d});
  for (std::size_t k = 0; k < config_.head_dims.size(); ++k) {
    const auto idx = std::to_string(k + 1);
    h = gelu(norm(linear(h, "head.fc" + idx), "head.norm" + idx));
  }
  return sigmoid(linear(h, "head.out"));
}

template <typename T>
Tensor<T> Model<T>::forward(const LogMelSpectrogram& s, ForwardTrace<T>* trace) const {
  if (s.n_mels != config_.n_mels || s.n_frames != config_.n_frames) {
    throw ShapeError("model configured for " + std::to_string(config_.n_mels) + "x" +
                     std::to_string(config_.n_frames) + " spectrograms, got " + std::to_string(s.n_mels) +
                     "x" + std::to_string(s.n_frames));
  }
  return forward_patches(extract_patches<T>(s, config_), trace);
}

template <typename T>
Model<T> Model<T>::clone() const {
  return cast<T>();
}

template <typename T>
template <typename U>
Model<U> Model<T>::cast() const {
  Model<U> out(config_);
  auto& dst = out.parameters();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto src = params_[i].value.data();
    auto to = dst[i].value.data();
    std::transform(src.begin(), src.end(), to.begin(), [](T v) { return static_cast<U>(v); });
    dst[i].value.set_requires_grad(params_[i].value.requires_grad());
  }
  return out;
}

Tensor<float> adapt_channel_weights(const Tensor<float>& kernel) {
  if (kernel.rank() != 4) {
    throw ShapeError("patch kernel must be [C, p, p, d], got " + shape_string(kernel.shape()));
  }
  if (kernel.dim(0) != 3) {
    throw ShapeError("patch kernel has " + std::to_string(kernel.dim(0)) + " channels, expected 3");
  }
  const std::size_t plane = kernel.size() / 3;
  Tensor<float> out(Shape{1, kernel.dim(1), kernel.dim(2), kernel.dim(3)});
  const auto src = kernel.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < plane; ++i) {
    dst[i] = static_cast<float>((static_cast<double>(src[i]) + src[plane + i] + src[2 * plane + i]) / 3.0);
  }
  return out;
}

namespace {

// Source coordinates and weights for resizing one axis of length `from` to
// `to`.
struct AxisMap {
  std::vector<std::size_t> lo;
  std::vector<std::size_t> hi;
  std::vector<double> w;
};

AxisMap axis_map(std::size_t from, std::size_t to) {
  AxisMap m;
  m.lo.resize(to);
  m.hi.resize(to);
  m.w.assign(to, 0.0);
  if (to <= from) {
    const std::size_t offset = (from - to) / 2;
    for (std::size_t i = 0; i < to; ++i) m.lo[i] = m.hi[i] = offset + i;
    return m;
  }
  for (std::size_t i = 0; i < to; ++i) {
    const double x = from == 1 ? 0.0
                               : static_cast<double>(i) * static_cast<double>(from - 1) /
                                     static_cast<double>(to - 1);
    const auto lo = std::min(static_cast<std::size_t>(std::floor(x)), from - 1);
    m.lo[i] = lo;
    m.hi[i] = std::min(lo + 1, from - 1);
    m.w[i] = x - static_cast<double>(lo);
  }
  return m;
}

}  // namespace

Tensor<float> interpolate_pos_grid(const Tensor<float>& grid, PatchGrid target) {
  if (grid.rank() != 3 || grid.dim(0) == 0 || grid.dim(1) == 0 || grid.dim(2) == 0) {
    throw ShapeError("position grid must be [F, T, d], got " + shape_string(grid.shape()));
  }
  if (target.freq == 0 || target.time == 0) throw ShapeError("target position grid must be nonempty");
  const std::size_t fs = grid.dim(0), ts = grid.dim(1), d = grid.dim(2);
  const AxisMap fm = axis_map(fs, target.freq);
  const AxisMap tm = axis_map(ts, target.time);
  Tensor<float> out(Shape{target.freq, target.time, d});
  const auto src = grid.data();
  auto dst = out.data();
  auto at = [&](std::size_t f, std::size_t t, std::size_t c) {
    return static_cast<double>(src[(f * ts + t) * d + c]);
  };
  for (std::size_t f = 0; f < target.freq; ++f) {
    for (std::size_t t = 0; t < target.time; ++t) {
      const double wf = fm.w[f], wt = tm.w[t];
      for (std::size_t c = 0; c < d; ++c) {
        const double top = (1.0 - wt) * at(fm.lo[f], tm.lo[t], c) + wt * at(fm.lo[f], tm.hi[t], c);
        const double bot = (1.0 - wt) * at(fm.hi[f], tm.lo[t], c) + wt * at(fm.hi[f], tm.hi[t], c);
        dst[(f * target.time + t) * d + c] = static_cast<float>((1.0 - wf) * top + wf * bot);
      }
    }
  }
  return out;
}

Tensor<float> pos_table_to_grid(const Tensor<float>& table, PatchGrid grid, bool freq_major) {
  if (table.rank() != 2 || table.dim(0) != 1 + grid.count()) {
    throw ShapeError("position table " + shape_string(table.shape()) + " does not match a " +
                     std::to_string(grid.freq) + "x" + std::to_string(grid.time) + " grid plus CLS");
  }
  const std::size_t d = table.dim(1);
  Tensor<float> out(Shape{grid.freq, grid.time, d});
  const auto src = table.data();
  auto dst = out.data();
  for (std::size_t f = 0; f < grid.freq; ++f) {
    for (std::size_t t = 0; t < grid.time; ++t) {
      const std::size_t token = 1 + (freq_major ? f * grid.time + t : t * grid.freq + f);
      std::copy_n(src.begin() + static_cast<long>(token * d), d,
                  dst.begin() + static_cast<long>((f * grid.time + t) * d));
    }
  }
  return out;
}

Tensor<float> pos_grid_to_table(const Tensor<float>& cls_row, const Tensor<float>& grid) {
  if (grid.rank() != 3) throw ShapeError("position grid must be [F, T, d]");
  const std::size_t fs = grid.dim(0), ts = grid.dim(1), d = grid.dim(2);
  if (cls_row.size() != d) throw ShapeError("CLS position row must have " + std::to_string(d) + " values");
  Tensor<float> out(Shape{1 + fs * ts, d});
  auto dst = out.data();
  std::copy(cls_row.data().begin(), cls_row.data().end(), dst.begin());
  const auto src = grid.data();
  for (std::size_t f = 0; f < fs; ++f) {
    for (std::size_t t = 0; t < ts; ++t) {
      std::copy_n(src.begin() + static_cast<long>((f * ts + t) * d), d,
                  dst.begin() + static_cast<long>((1 + t * fs + f) * d));
    }
  }
  return out;
}

Tensor<float> interpolate_pos_embed(const Tensor<float>& table, PatchGrid source, PatchGrid target) {
  const Tensor<float> grid = pos_table_to_grid(table, source);
  const std::size_t d = table.dim(1);
  Tensor<float> cls(Shape{d}, std::vector<float>(table.data().begin(), table.data().begin() + static_cast<long>(d)));
  if (source == target) return table.clone();
  return pos_grid_to_table(cls, interpolate_pos_grid(grid, target));
}

template Tensor<float> extract_patches<float>(const LogMelSpectrogram&, const ModelConfig&);
template Tensor<double> extract_patches<double>(const LogMelSpectrogram&, const ModelConfig&);
template class Model<float>;
template class Model<double>;
template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace cribtag
