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

// Run configuration: a sectioned `key = value` file merged with command-line
// overrides.
//
//   [model]    preset, embed_dim, n_layers, n_heads, mlp_ratio, patch, overlap,
//              n_mels, n_frames, head_dims, n_classes, pooling
//   [frontend] win_length, hop, fft_size, n_mels, fmin, fmax, log_floor
//   [augment]  enabled, max_freq_mask, max_time_mask, n_freq_masks,
//              n_time_masks, noise_snr_db, noise_prob, mixup, mixup_prob,
//              mask_fill
//   [train]    epochs, lr, gamma, milestones, milestone_every, batch_size,
//              freeze, scheme, cap, seed, val_fraction
//   [data]     public_manifest, lb_manifest, synth_white_noise, check_audio
//   [run]      threads

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "cribtag/augment.hpp"
#include "cribtag/frontend.hpp"
#include "cribtag/model.hpp"
#include "cribtag/train.hpp"

namespace cribtag {

// Section -> key -> raw value. Keys outside any section live under "".
class IniDocument {
 public:
  void set(const std::string& section, const std::string& key, std::string value);
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  const std::map<std::string, std::map<std::string, std::string>>& sections() const { return sections_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// `#` and `;` start comments; values may be double-quoted.
IniDocument parse_ini(std::istream& in, std::string_view source = "<config>");
IniDocument load_ini(const std::filesystem::path& path);

// "section.key=value".
void apply_override(IniDocument& doc, std::string_view assignment);

struct RunConfig {
  FrontendConfig frontend;
  ModelConfig model = ModelConfig::base();
  TrainConfig train;
  std::string preset = "base";
  std::filesystem::path public_manifest;
  std::filesystem::path lb_manifest;
  std::size_t synth_white_noise = 0;
  bool check_audio = true;
  int threads = 1;

  // Cross-module consistency (frontend vs model input size, augment bounds).
  void validate() const;
  // Manifests required by the chosen scheme must exist.
  void validate_paths() const;
};

// Presets are applied first, then every other key. Unknown sections or keys
// are errors.
RunConfig run_config_from(const IniDocument& doc);

// Canonical rendering; parse_ini(render) reproduces the config.
std::string render_run_config(const RunConfig& cfg);

}  // namespace cribtag
