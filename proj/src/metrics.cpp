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

#include "cribtag/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "cribtag/error.hpp"

namespace cribtag {

namespace {

using Json = nlohmann::ordered_json;

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string_view mode_name(PredictionMode mode) {
  return mode == PredictionMode::kSingleLabel ? "single_label" : "multi_label";
}

std::size_t argmax(std::span<const float> probs) {
  if (probs.empty()) throw ContractError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

LabelSet predict_labels(std::span<const float> probs, PredictionMode mode, double threshold) {
  if (probs.size() != kNumClasses) {
    throw ShapeError("expected " + std::to_string(kNumClasses) + " probabilities, got " +
                     std::to_string(probs.size()));
  }
  LabelSet out;
  if (mode == PredictionMode::kMultiLabel) {
    for (std::size_t c = 0; c < probs.size(); ++c) {
      if (probs[c] >= threshold) out.add(static_cast<Label>(c));
    }
    if (!out.empty()) return out;
  }
  out.add(static_cast<Label>(argmax(probs)));
  return out;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t pred, std::int64_t count) {
  if (truth >= k_ || pred >= k_) {
    throw ContractError("class index out of range for a " + std::to_string(k_) + "-class confusion matrix");
  }
  if (count < 0) throw ContractError("negative confusion count");
  cells_[truth * k_ + pred] += count;
  n_ += count;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(c, j);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, c);
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, i);
  return s;
}

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix cm(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw ShapeError("confusion matrix must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) cm.add(i, j, rows[i][j]);
  }
  return cm;
}

std::vector<std::vector<std::int64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::int64_t>> out(k_, std::vector<std::int64_t>(k_));
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) out[i][j] = at(i, j);
  }
  return out;
}

ConfusionMatrix confusion(std::span<const std::size_t> preds, std::span<const std::size_t> truths, std::size_t k) {
  if (preds.size() != truths.size()) {
    throw ContractError("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                        std::to_string(truths.size()) + " truths");
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < preds.size(); ++i) cm.add(truths[i], preds[i]);
  return cm;
}

ClassMetrics class_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  ClassMetrics m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

MacroMetrics macro_metrics(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ContractError("macro metrics of an empty confusion matrix");
  MacroMetrics out;
  const std::size_t k = cm.classes();
  for (std::size_t c = 0; c < k; ++c) {
    const std::int64_t tp = cm.at(c, c);
    const auto m = class_metrics(tp, cm.col_sum(c) - tp, cm.row_sum(c) - tp);
    out.per_class.push_back(m);
    out.precision += m.precision;
    out.recall += m.recall;
    out.f1 += m.f1;
  }
  out.precision /= static_cast<double>(k);
  out.recall /= static_cast<double>(k);
  out.f1 /= static_cast<double>(k);
  return out;
}

Kappa cohen_kappa(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ContractError("kappa of an empty confusion matrix");
  const double n = static_cast<double>(cm.n());
  Kappa k;
  k.p_o = static_cast<double>(cm.trace()) / n;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    k.p_e += (static_cast<double>(cm.row_sum(c)) / n) * (static_cast<double>(cm.col_sum(c)) / n);
  }
  if (k.p_e >= 1.0) {
    throw UndefinedMetricError("Cohen's kappa is undefined: chance agreement p_e = 1 (truths and predictions are one class)");
  }
  k.kappa = (k.p_o - k.p_e) / (1.0 - k.p_e);
  return k;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.n() == 0) throw ContractError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(cm.n());
}

std::vector<std::string> default_class_names() {
  std::vector<std::string> names;
  for (auto l : all_labels()) names.emplace_back(label_name(l));
  return names;
}

MetricsReport report_from_confusion(const ConfusionMatrix& cm, std::vector<std::string> class_names) {
  if (class_names.size() != cm.classes()) throw ShapeError("class name count differs from confusion size");
  MetricsReport r;
  r.mode = PredictionMode::kSingleLabel;
  r.class_names = std::move(class_names);
  r.n = cm.n();
  r.accuracy = accuracy(cm);
  const auto macro = macro_metrics(cm);
  r.macro_precision = macro.precision;
  r.macro_recall = macro.recall;
  r.macro_f1 = macro.f1;
  r.per_class = macro.per_class;
  const double n = static_cast<double>(cm.n());
  double p_e = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    p_e += (static_cast<double>(cm.row_sum(c)) / n) * (static_cast<double>(cm.col_sum(c)) / n);
  }
  r.p_o = static_cast<double>(cm.trace()) / n;
  r.p_e = p_e;
  if (p_e < 1.0) r.kappa = cohen_kappa(cm).kappa;
  r.confusion = cm;
  return r;
}

MetricsReport multilabel_report(std::span<const LabelSet> preds, std::span<const LabelSet> truths) {
  if (preds.size() != truths.size()) throw ContractError("multilabel_report: length mismatch");
  if (preds.empty()) throw ContractError("multilabel_report: no samples");
  MetricsReport r;
  r.mode = PredictionMode::kMultiLabel;
  r.class_names = default_class_names();
  r.n = static_cast<std::int64_t>(preds.size());
  std::int64_t correct = 0;
  for (auto l : all_labels()) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const bool p = preds[i].contains(l), t = truths[i].contains(l);
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
      correct += p == t;
    }
    const auto m = class_metrics(tp, fp, fn);
    r.per_class.push_back(m);
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
  }
  r.macro_precision /= kNumClasses;
  r.macro_recall /= kNumClasses;
  r.macro_f1 /= kNumClasses;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size() * kNumClasses);
  return r;
}

std::string emit_report(const MetricsReport& r, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    Json j;
    j["mode"] = std::string(mode_name(r.mode));
    j["accuracy"] = r.accuracy;
    j["macro"] = {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}};
    Json per = Json::object();
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
      per[r.class_names.at(c)] = {{"p", r.per_class[c].precision}, {"r", r.per_class[c].recall}, {"f1", r.per_class[c].f1}};
    }
    j["per_class"] = per;
    j["kappa"] = optional_number(r.kappa);
    j["p_o"] = optional_number(r.p_o);
    j["p_e"] = optional_number(r.p_e);
    j["confusion"] = r.confusion ? Json(r.confusion->rows()) : Json(nullptr);
    j["n"] = r.n;
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  const char* acc_label = r.mode == PredictionMode::kSingleLabel ? "accuracy" : "label_accuracy";
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-10s %-10s %-10s %-10s\n", acc_label, "precision", "recall", "f1", "kappa");
  os << line;
  const std::string kappa = r.kappa ? fixed4(*r.kappa) : (r.mode == PredictionMode::kSingleLabel ? "undefined" : "n/a");
  std::snprintf(line, sizeof line, "%-16s %-10s %-10s %-10s %-10s\n", fixed4(r.accuracy).c_str(),
                fixed4(r.macro_precision).c_str(), fixed4(r.macro_recall).c_str(), fixed4(r.macro_f1).c_str(),
                kappa.c_str());
  os << line;
  os << "n = " << r.n << ", mode = " << mode_name(r.mode) << "\n";
  if (r.p_o && r.p_e) os << "p_o = " << fixed4(*r.p_o) << ", p_e = " << fixed4(*r.p_e) << "\n";
  os << "\n";
  std::snprintf(line, sizeof line, "%-20s %-10s %-10s %-10s\n", "class", "precision", "recall", "f1");
  os << line;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    std::snprintf(line, sizeof line, "%-20s %-10s %-10s %-10s\n", r.class_names.at(c).c_str(),
                  fixed4(r.per_class[c].precision).c_str(), fixed4(r.per_class[c].recall).c_str(),
                  fixed4(r.per_class[c].f1).c_str());
    os << line;
  }
  if (r.confusion) {
    os << "\nconfusion (rows = truth, columns = prediction)\n";
    const auto& cm = *r.confusion;
    std::snprintf(line, sizeof line, "%-20s", "");
    os << line;
    for (std::size_t j = 0; j < cm.classes(); ++j) {
      std::snprintf(line, sizeof line, " %6zu", j);
      os << line;
    }
    os << "\n";
    for (std::size_t i = 0; i < cm.classes(); ++i) {
      std::snprintf(line, sizeof line, "%-20s", r.class_names.at(i).c_str());
      os << line;
      for (std::size_t j = 0; j < cm.classes(); ++j) {
        std::snprintf(line, sizeof line, " %6lld", static_cast<long long>(cm.at(i, j)));
        os << line;
      }
      os << "\n";
    }
  }
  return os.str();
}

MetricsReport parse_report_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    MetricsReport r;
    r.mode = j.value("mode", std::string("single_label")) == "multi_label" ? PredictionMode::kMultiLabel
                                                                             : PredictionMode::kSingleLabel;
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_precision = j.at("macro").at("precision").get<double>();
    r.macro_recall = j.at("macro").at("recall").get<double>();
    r.macro_f1 = j.at("macro").at("f1").get<double>();
    for (const auto& [name, m] : j.at("per_class").items()) {
      r.class_names.push_back(name);
      r.per_class.push_back({m.at("p").get<double>(), m.at("r").get<double>(), m.at("f1").get<double>()});
    }
    r.kappa = read_optional(j, "kappa");
    r.p_o = read_optional(j, "p_o");
    r.p_e = read_optional(j, "p_e");
    if (j.contains("confusion") && !j.at("confusion").is_null()) {
      r.confusion = ConfusionMatrix::from_rows(j.at("confusion").get<std::vector<std::vector<std::int64_t>>>());
    }
    r.n = j.at("n").get<std::int64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON is missing fields: ") + e.what());
  }
}

}  // namespace cribtag
