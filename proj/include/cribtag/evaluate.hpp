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

// Evaluation driver: segment -> normalized spectrogram -> probabilities ->
// labels -> report. Never augments.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cribtag/dataset.hpp"
#include "cribtag/frontend.hpp"
#include "cribtag/metrics.hpp"
#include "cribtag/model.hpp"

namespace cribtag {

// Normalized log-Mel input for one clip.
LogMelSpectrogram model_input(std::span<const float> audio16k, const FrontendConfig& fe, const NormStats& stats);

// Probabilities for one normalized spectrogram.
std::vector<float> predict(const Model<float>& model, const LogMelSpectrogram& normalized);

using Predictor = std::function<std::vector<float>(const Segment&)>;

Predictor model_predictor(const Model<float>& model, const FrontendConfig& fe, const NormStats& stats);

struct EvalOptions {
  PredictionMode mode = PredictionMode::kSingleLabel;
  double threshold = 0.5;
};

// Single-label truth is each segment's primary label.
MetricsReport evaluate_predictions(std::span<const std::vector<float>> probs, std::span<const LabelSet> truths,
                                   const EvalOptions& options = {});

// Empty test set -> ContractError.
MetricsReport evaluate(const Predictor& predictor, std::span<const Segment> test, const EvalOptions& options = {});
MetricsReport evaluate(const Model<float>& model, std::span<const Segment> test, const FrontendConfig& fe,
                       const NormStats& stats, const EvalOptions& options = {});

}  // namespace cribtag
