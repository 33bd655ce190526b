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

// Training loop: BCE on sigmoid outputs, Adam with a multistep schedule,
// freeze policies, per-epoch validation and best-model selection.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cribtag/adam.hpp"
#include "cribtag/augment.hpp"
#include "cribtag/dataset.hpp"
#include "cribtag/frontend.hpp"
#include "cribtag/metrics.hpp"
#include "cribtag/model.hpp"

namespace cribtag {

enum class FreezePolicy { kWholeModel, kLastTwoLayers };

std::string_view freeze_policy_name(FreezePolicy policy);
std::optional<FreezePolicy> parse_freeze_policy(std::string_view text);

struct TrainConfig {
  int epochs = 25;
  double lr0 = 1e-5;
  double gamma = 0.85;
  // Explicit milestone epochs; when empty, every `milestone_every` epochs.
  std::vector<int> milestones;
  int milestone_every = 5;
  std::size_t batch_size = 16;
  FreezePolicy freeze = FreezePolicy::kWholeModel;
  Scheme scheme = Scheme::kMixed;
  double oversample_cap = 4.0;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  bool augment = true;
  AugmentConfig augment_config;
  AdamOptions adam;
  PredictionMode val_mode = PredictionMode::kSingleLabel;

  std::vector<int> resolved_milestones() const;
  void validate() const;

  // "base": the defaults above. "tiny": lr0 = 1e-3 for scratch training.
  static TrainConfig preset(std::string_view name);
};

// lr0 * gamma^(number of milestones <= epoch).
double lr_at(int epoch, const TrainConfig& cfg);

// Mean binary cross-entropy over every element, probabilities clamped to
// [1e-7, 1 - 1e-7].
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& probs, const Tensor<T>& targets);

inline constexpr double kProbClamp = 1e-7;

// Whether parameter `name` trains under `policy` for an n_layers encoder.
bool is_trainable(std::string_view name, FreezePolicy policy, std::size_t n_layers);

// Sets requires_grad on every parameter and returns the trainable ones.
template <typename T>
std::vector<Tensor<T>> apply_freeze_policy(Model<T>& model, FreezePolicy policy);

std::vector<float> multi_hot(LabelSet labels);

// Splits off roughly `fraction` of the segments for validation, grouped by
// source record so windows of one interval and their oversampled copies stay
// together.
std::pair<std::vector<Segment>, std::vector<Segment>> holdout_split(std::span<const Segment> segments,
                                                                    double fraction, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double val_accuracy = 0.0;
  std::size_t steps = 0;
};

std::string epoch_record_json(const EpochRecord& r);

template <typename T>
struct FitResult {
  Model<T> best;
  int best_epoch = -1;
  double best_f1 = -1.0;
  std::vector<EpochRecord> log;
  bool stopped_early = false;
};

template <typename T>
struct FitHooks {
  // Called after each epoch; return true to stop training.
  std::function<bool(const EpochRecord&, const Model<T>&)> on_epoch_end;
  // Called after every optimizer step with the step's mean loss.
  std::function<void(int epoch, std::size_t step, double loss)> on_step;
  // One JSON line per epoch when set.
  std::ostream* epoch_log = nullptr;
};

// Trains `model` in place on `train` and returns the snapshot with the best
// validation macro-F1 (ties keep the earlier epoch). Segments are turned into
// spectrograms with `fe` and normalized with `stats`; only training segments
// are augmented.
template <typename T>
FitResult<T> fit(std::span<const Segment> train, std::span<const Segment> val, Model<T>& model,
                 const TrainConfig& cfg, const FrontendConfig& fe, const NormStats& stats,
                 const FitHooks<T>& hooks = {});

}  // namespace cribtag
