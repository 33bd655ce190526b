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

// Named-tensor archives.
//
//   "ASTC" | u32 version | u32 count | entries... | u32 crc32
//   entry: u16 name_len | name | u8 dtype (0 = f32) | u8 ndim | u32 dims[ndim] | data
//
// All integers and floats little-endian; the CRC covers every byte before it.
// Model config, training metadata and normalization stats travel as f32
// tensors under the reserved "meta/" prefix.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cribtag/frontend.hpp"
#include "cribtag/model.hpp"

namespace cribtag {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<float> data;
  bool operator==(const NamedTensor&) const = default;
};

struct TrainingMeta {
  int epoch = -1;
  double best_metric = 0.0;
};

struct Checkpoint {
  ModelConfig config;
  TrainingMeta meta;
  std::optional<NormStats> norm;
  // Model parameters only, in model order.
  std::vector<NamedTensor> tensors;
};

// Single entries, as stored inside an archive (also the raw-tensor file format).
void append_tensor_entry(std::vector<std::uint8_t>& out, const NamedTensor& t);
// Reads one entry at `offset` and advances it.
NamedTensor read_tensor_entry(std::span<const std::uint8_t> bytes, std::size_t& offset);

std::vector<std::uint8_t> encode_archive(std::span<const NamedTensor> tensors);
// Verifies magic, version and CRC before touching any entry.
std::vector<NamedTensor> decode_archive(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Checkpoint make_checkpoint(const Model<float>& model, const TrainingMeta& meta = {},
                           std::optional<NormStats> norm = std::nullopt);
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const TrainingMeta& meta = {}, std::optional<NormStats> norm = std::nullopt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

enum class LoadMode {
  // Every parameter present exactly once, nothing else.
  kStrict,
  // Any subset of known parameters; the rest keep their current values.
  kPartial,
};

// Copies tensors into `model` after checking names and shapes. Returns the
// names that were loaded.
std::vector<std::string> load_into(Model<float>& model, std::span<const NamedTensor> tensors,
                                   LoadMode mode = LoadMode::kStrict);

// Builds a model from the embedded config and loads it strictly.
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

// Loads a checkpoint whose embedded config must equal `expected`.
Model<float> load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected,
                             LoadMode mode = LoadMode::kStrict);

}  // namespace cribtag
