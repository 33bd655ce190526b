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

// Patch transformer classifier over log-Mel spectrograms.
//
// Layout: overlapping patch x patch tiles every `stride` bins/frames, a linear
// patch embedding, a CLS token, a learned positional table, pre-norm encoder
// blocks, a final norm, pooling, a FC/LN/GELU head and a sigmoid output.
//
// Weight matrices are stored [in, out] and applied as x . W. Token order is
// time-major: the patch at grid cell (f, t) is token 1 + t * F_p + f, token 0
// is CLS. Patch vectors flatten the tile row-major (frequency rows, time
// columns).

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cribtag/frontend.hpp"
#include "cribtag/tensor.hpp"

namespace cribtag {

enum class Pooling { kMean, kCls };

struct PatchGrid {
  std::size_t freq = 0;
  std::size_t time = 0;
  std::size_t count() const { return freq * time; }
  bool operator==(const PatchGrid&) const = default;
};

// floor((extent - patch) / stride) + 1 per axis; 0 when the extent is smaller
// than a patch.
PatchGrid patch_grid(std::size_t n_mels, std::size_t n_frames, std::size_t patch, std::size_t stride);

struct ModelConfig {
  std::size_t embed_dim = 768;
  std::size_t n_layers = 12;
  std::size_t n_heads = 12;
  std::size_t mlp_ratio = 4;
  std::size_t patch = 16;
  std::size_t overlap = 6;
  std::size_t n_mels = 128;
  std::size_t n_frames = 398;
  std::vector<std::size_t> head_dims{3072, 768};
  std::size_t n_classes = 7;
  Pooling pooling = Pooling::kMean;

  std::size_t stride() const { return patch - overlap; }
  std::size_t patch_dim() const { return patch * patch; }
  PatchGrid grid() const { return patch_grid(n_mels, n_frames, patch, stride()); }
  std::size_t n_tokens() const { return 1 + grid().count(); }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  static ModelConfig base();
  static ModelConfig tiny();
};

// Named presets: "base", "tiny".
ModelConfig model_preset(std::string_view name);

// [F_p * T_p, patch * patch], time-major.
template <typename T>
Tensor<T> extract_patches(const LogMelSpectrogram& s, const ModelConfig& cfg);

enum class ParamKind { kWeight, kBias, kNormGain, kNormShift, kEmbedding };

template <typename T>
struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::kWeight;
  Tensor<T> value;
};

// Collects intermediate values for inspection.
template <typename T>
struct ForwardTrace {
  // One [N, N] softmax matrix per (layer, head), layer-major.
  std::vector<Tensor<T>> attention;
};

template <typename T>
class Model {
 public:
  // Parameters are allocated with norm gains at 1 and everything else 0.
  explicit Model(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  bool has(std::string_view name) const;
  Tensor<T>& param(std::string_view name);
  const Tensor<T>& param(std::string_view name) const;
  // Total number of scalar weights.
  std::size_t size() const;
  // Shape the config prescribes for `name`; ConfigError for unknown names.
  Shape expected_shape(std::string_view name) const;

  // Truncated normal (sigma 0.02, cut at 2 sigma) for weights and embeddings,
  // zero biases, unit norm gains.
  void init(std::uint64_t seed);

  // One example: patches [P, patch_dim] -> probabilities [1, n_classes].
  Tensor<T> forward_patches(const Tensor<T>& patches, ForwardTrace<T>* trace = nullptr) const;
  Tensor<T> forward(const LogMelSpectrogram& s, ForwardTrace<T>* trace = nullptr) const;

  // Deep copy; the result shares nothing with this model.
  Model clone() const;
  template <typename U>
  Model<U> cast() const;

 private:
  void add_param(std::string name, ParamKind kind, Shape shape);
  Tensor<T> linear(const Tensor<T>& x, const std::string& prefix) const;
  Tensor<T> norm(const Tensor<T>& x, const std::string& prefix) const;

  ModelConfig config_;
  std::vector<Parameter<T>> params_;
};

// Averages a [3, patch, patch, d] vision patch kernel over its channels into
// [1, patch, patch, d].
Tensor<float> adapt_channel_weights(const Tensor<float>& kernel);

// Resizes a [F, T, d] grid of position vectors: center cut on axes that
// shrink, bilinear (corner-aligned) on axes that grow.
Tensor<float> interpolate_pos_grid(const Tensor<float>& grid, PatchGrid target);

// Resizes a [1 + F*T, d] time-major position table; row 0 (CLS) is copied.
Tensor<float> interpolate_pos_embed(const Tensor<float>& table, PatchGrid source, PatchGrid target);

// Conversions between a [1 + F*T, d] table and the [F, T, d] grid. A
// freq-major table lists tokens as 1 + f * T + t.
Tensor<float> pos_table_to_grid(const Tensor<float>& table, PatchGrid grid, bool freq_major = false);
Tensor<float> pos_grid_to_table(const Tensor<float>& cls_row, const Tensor<float>& grid);

}  // namespace cribtag
