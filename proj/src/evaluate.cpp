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

#include "cribtag/evaluate.hpp"

#include "cribtag/error.hpp"

namespace cribtag {

LogMelSpectrogram model_input(std::span<const float> audio16k, const FrontendConfig& fe, const NormStats& stats) {
  Waveform w{{audio16k.begin(), audio16k.end()}, fe.sample_rate};
  return normalize(log_mel(w, fe), stats);
}

std::vector<float> predict(const Model<float>& model, const LogMelSpectrogram& normalized) {
  const Tensor<float> probs = model.forward(normalized);
  return {probs.data().begin(), probs.data().end()};
}

Predictor model_predictor(const Model<float>& model, const FrontendConfig& fe, const NormStats& stats) {
  return [&model, fe, stats](const Segment& s) { return predict(model, model_input(s.audio(), fe, stats)); };
}

MetricsReport evaluate_predictions(std::span<const std::vector<float>> probs, std::span<const LabelSet> truths,
                                   const EvalOptions& options) {
  if (probs.size() != truths.size()) throw ContractError("evaluate: prediction/truth count mismatch");
  if (probs.empty()) throw ContractError("evaluate: empty test set");
  if (options.mode == PredictionMode::kMultiLabel) {
    std::vector<LabelSet> preds;
    for (const auto& p : probs) preds.push_back(predict_labels(p, options.mode, options.threshold));
    return multilabel_report(preds, truths);
  }
  ConfusionMatrix cm(kNumClasses);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const Label pred = predict_labels(probs[i], options.mode, options.threshold).primary();
    cm.add(static_cast<std::size_t>(truths[i].primary()), static_cast<std::size_t>(pred));
  }
  return report_from_confusion(cm, default_class_names());
}

MetricsReport evaluate(const Predictor& predictor, std::span<const Segment> test, const EvalOptions& options) {
  if (test.empty()) throw ContractError("evaluate: empty test set");
  std::vector<std::vector<float>> probs;
  std::vector<LabelSet> truths;
  probs.reserve(test.size());
  for (const auto& s : test) {
    probs.push_back(predictor(s));
    truths.push_back(s.labels);
  }
  return evaluate_predictions(probs, truths, options);
}

MetricsReport evaluate(const Model<float>& model, std::span<const Segment> test, const FrontendConfig& fe,
                       const NormStats& stats, const EvalOptions& options) {
  return evaluate(model_predictor(model, fe, stats), test, options);
}

}  // namespace cribtag
