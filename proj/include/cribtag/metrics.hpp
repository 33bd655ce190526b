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

// Confusion matrices, macro precision/recall/F1, Cohen's kappa and report
// rendering.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cribtag/dataset.hpp"

namespace cribtag {

enum class PredictionMode { kSingleLabel, kMultiLabel };

std::string_view mode_name(PredictionMode mode);

// Single-label: argmax, ties to the lowest index. Multi-label: every class
// with p >= threshold, or the argmax when none qualifies.
LabelSet predict_labels(std::span<const float> probs, PredictionMode mode, double threshold = 0.5);
std::size_t argmax(std::span<const float> probs);

// k x k counts, rows = truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k = kNumClasses) : k_(k), cells_(k * k, 0) {}

  std::size_t classes() const { return k_; }
  std::int64_t n() const { return n_; }
  std::int64_t at(std::size_t truth, std::size_t pred) const { return cells_[truth * k_ + pred]; }
  void add(std::size_t truth, std::size_t pred, std::int64_t count = 1);
  std::int64_t row_sum(std::size_t c) const;
  std::int64_t col_sum(std::size_t c) const;
  std::int64_t trace() const;
  bool operator==(const ConfusionMatrix&) const = default;

  static ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);
  std::vector<std::vector<std::int64_t>> rows() const;

 private:
  std::size_t k_;
  std::vector<std::int64_t> cells_;
  std::int64_t n_ = 0;
};

// Length mismatch or out-of-range class index -> ContractError.
ConfusionMatrix confusion(std::span<const std::size_t> preds, std::span<const std::size_t> truths,
                          std::size_t k = kNumClasses);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const ClassMetrics&) const = default;
};

// Zero denominators give 0.
ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn);

struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;
};

// Unweighted mean over all k classes. n == 0 -> ContractError.
MacroMetrics macro_metrics(const ConfusionMatrix& cm);

struct Kappa {
  double kappa = 0.0;
  double p_o = 0.0;
  double p_e = 0.0;
};

// n == 0 -> ContractError; p_e == 1 -> UndefinedMetricError.
Kappa cohen_kappa(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

struct MetricsReport {
  PredictionMode mode = PredictionMode::kSingleLabel;
  std::vector<std::string> class_names;
  std::int64_t n = 0;
  // Single-label: fraction of exact matches. Multi-label: fraction of correct
  // (sample, class) decisions.
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  // Single-label only. kappa stays empty when p_e == 1.
  std::optional<double> kappa;
  std::optional<double> p_o;
  std::optional<double> p_e;
  std::optional<ConfusionMatrix> confusion;
  bool operator==(const MetricsReport&) const = default;
};

MetricsReport report_from_confusion(const ConfusionMatrix& cm, std::vector<std::string> class_names);

// Per-class binary counts over multi-hot truths and predictions.
MetricsReport multilabel_report(std::span<const LabelSet> preds, std::span<const LabelSet> truths);

enum class ReportFormat { kJson, kText };

std::string emit_report(const MetricsReport& report, ReportFormat format);
MetricsReport parse_report_json(const std::string& text);

std::vector<std::string> default_class_names();

}  // namespace cribtag
