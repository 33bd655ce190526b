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

// Command implementations behind the `cribtag` tool. Each command reports
// failures by throwing a cribtag::Error; the tool maps those to exit codes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cribtag/config.hpp"
#include "cribtag/dataset.hpp"
#include "cribtag/metrics.hpp"

namespace cribtag {

// ---- prepare

struct PrepareOptions {
  std::filesystem::path label_dir;
  std::filesystem::path wav_dir;
  std::filesystem::path out_manifest;
  Source source = Source::kLbHome;
};

struct PrepareResult {
  std::vector<ManifestRecord> records;
  std::vector<std::filesystem::path> orphans;
};

// One interval per line: onset<TAB>offset<TAB>label[,label...]. Blank lines
// and lines starting with '#' are skipped. Identical intervals in one file
// merge into one multi-label record. The family id is the stem up to the
// first '_'.
std::vector<ManifestRecord> parse_interval_file(std::istream& in, const std::filesystem::path& audio_path,
                                                const std::string& family_id, Source source,
                                                const std::string& source_name = "<intervals>");

PrepareResult cmd_prepare(const PrepareOptions& options, std::ostream& out);

// ---- stats

struct StatsOptions {
  RunConfig config;
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> out_json;
};

// Per-class minutes, segment counts and train-split normalization stats.
NormStats cmd_stats(const StatsOptions& options, std::ostream& out);

// ---- train

struct TrainOptions {
  RunConfig config;
  std::filesystem::path out_dir;
};

struct TrainSummary {
  int best_epoch = -1;
  double best_val_f1 = 0.0;
  NormStats stats;
  MetricsReport test_report;
  std::size_t train_segments = 0;
  std::size_t val_segments = 0;
  std::size_t test_segments = 0;
};

// Writes model.astc, epochs.jsonl, report.json, report.txt and run.ini into
// out_dir.
TrainSummary cmd_train(const TrainOptions& options, std::ostream& out);

// ---- eval

enum class SplitPart { kTest, kTrain, kAll };

struct EvalCommandOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  SplitPart part = SplitPart::kTest;
  bool allow_train_eval = false;
  std::uint64_t seed = 0;
  PredictionMode mode = PredictionMode::kSingleLabel;
  double threshold = 0.5;
  bool check_audio = true;
  // <prefix>.json and <prefix>.txt when set.
  std::optional<std::filesystem::path> out_prefix;
};

MetricsReport cmd_eval(const EvalCommandOptions& options, std::ostream& out);

// ---- tag

struct TagOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path wav;
  double hop_s = 4.0;
  PredictionMode mode = PredictionMode::kSingleLabel;
  double threshold = 0.5;
};

// Window starts k * hop_s with start + 4 s <= duration.
std::vector<double> tag_window_starts(double duration_s, double hop_s);

// JSON lines: {"onset","offset","label","labels","probs"}; "label" is the
// top class, "labels" the set predicted under the chosen mode.
std::size_t cmd_tag(const TagOptions& options, std::ostream& out);

// ---- import-weights

struct ImportOptions {
  // A directory of single-entry raw tensor files and/or archives, or one
  // archive file.
  std::filesystem::path source;
  ModelConfig model;
  std::filesystem::path out;
  // Source positional grid (F x T); inferred when absent.
  std::optional<PatchGrid> pos_grid;
  // Source positional table lists tokens frequency-major (vision row-major).
  bool pos_freq_major = false;
  bool ignore_unmapped = false;
  std::uint64_t seed = 0;
};

struct ImportResult {
  std::vector<std::string> imported;
  std::vector<std::string> adapted;
  std::vector<std::string> initialized;
  std::vector<std::string> unmapped;
};

ImportResult cmd_import_weights(const ImportOptions& options, std::ostream& out);

// ---- augment-preview

struct PreviewOptions {
  std::filesystem::path wav;
  std::filesystem::path out_dir;
  double start_s = 0.0;
  RunConfig config;
  std::uint64_t seed = 0;
  // Normalization stats from this checkpoint; the clip's own stats otherwise.
  std::optional<std::filesystem::path> checkpoint;
};

// Writes pre.csv and post.csv.
void cmd_augment_preview(const PreviewOptions& options, std::ostream& out);

}  // namespace cribtag
