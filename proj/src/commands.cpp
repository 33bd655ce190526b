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

#include "cribtag/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cribtag/augment.hpp"
#include "cribtag/checkpoint.hpp"
#include "cribtag/error.hpp"
#include "cribtag/evaluate.hpp"
#include "cribtag/log.hpp"
#include "cribtag/ops.hpp"
#include "cribtag/train.hpp"

namespace fs = std::filesystem;

namespace cribtag {

namespace {

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

std::vector<fs::path> list_files(const fs::path& dir, const std::set<std::string>& exts) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && exts.count(lower_ext(e.path()))) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string family_of(const std::string& stem) { return stem.substr(0, stem.find('_')); }

bool by_path_onset(const ManifestRecord& a, const ManifestRecord& b) {
  if (a.audio_path != b.audio_path) return a.audio_path < b.audio_path;
  return a.onset_s < b.onset_s;
}

double parse_seconds(const std::string& text, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ParseError(where + ": bad time value '" + text + "'");
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

struct Corpus {
  SplitResult records;
  std::vector<Segment> train;
  std::vector<Segment> test;
};

Corpus load_corpus(const fs::path& manifest, const RunConfig& cfg, AudioLibrary& lib) {
  Corpus c;
  const auto records = load_manifest(manifest, cfg.check_audio);
  if (records.empty()) throw DataError("manifest " + manifest.string() + " has no records");
  c.records = split(records, {0.8, cfg.train.seed});
  c.train = extract_all(c.records.train, lib);
  c.test = extract_all(c.records.test, lib);
  return c;
}

NormStats stats_for(std::span<const Segment> segments, const FrontendConfig& fe) {
  std::set<std::string> seen;
  std::vector<LogMelSpectrogram> specs;
  for (const auto& s : segments) {
    if (!seen.insert(s.provenance.id()).second) continue;
    specs.push_back(log_mel(s.waveform(), fe));
  }
  return compute_stats(specs);
}

std::string json_line(const nlohmann::ordered_json& j) { return j.dump(); }

}  // namespace

// ---- prepare

std::vector<ManifestRecord> parse_interval_file(std::istream& in, const fs::path& audio_path,
                                                const std::string& family_id, Source source,
                                                const std::string& source_name) {
  std::map<std::pair<double, double>, LabelSet> merged;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 3) throw ParseError(where + ": expected onset<TAB>offset<TAB>label");
    const double on = parse_seconds(cols[0], where);
    const double off = parse_seconds(cols[1], where);
    if (!(on >= 0.0 && on < off)) throw ValidationError(where + ": need 0 <= onset < offset");
    LabelSet labels;
    std::stringstream ls(cols[2]);
    std::string name;
    while (std::getline(ls, name, ',')) {
      const auto b = name.find_first_not_of(' '), e = name.find_last_not_of(' ');
      if (b == std::string::npos) continue;
      const auto trimmed = name.substr(b, e - b + 1);
      const auto label = parse_label(trimmed);
      if (!label) throw ValidationError(where + ": unknown label '" + trimmed + "'");
      labels.add(*label);
    }
    if (labels.empty()) throw ValidationError(where + ": no label");
    merged[{on, off}] = merged[{on, off}] | labels;
  }
  std::vector<ManifestRecord> out;
  for (const auto& [span, labels] : merged) {
    ManifestRecord r;
    r.audio_path = audio_path;
    r.onset_s = span.first;
    r.offset_s = span.second;
    r.labels = labels;
    r.family_id = family_id;
    r.source = source;
    out.push_back(r);
  }
  return out;
}

PrepareResult cmd_prepare(const PrepareOptions& options, std::ostream& out) {
  const auto label_files = list_files(options.label_dir, {".txt", ".tsv", ".lab"});
  std::map<std::string, fs::path> wavs;
  for (const auto& w : list_files(options.wav_dir, {".wav"})) wavs[w.stem().string()] = w;

  PrepareResult result;
  for (const auto& lf : label_files) {
    const auto stem = lf.stem().string();
    const auto wav = wavs.find(stem);
    if (wav == wavs.end()) {
      warn("no audio for label file " + lf.string() + "; skipped");
      result.orphans.push_back(lf);
      continue;
    }
    std::ifstream in(lf);
    if (!in) throw DataError("cannot open " + lf.string());
    auto recs = parse_interval_file(in, fs::absolute(wav->second), family_of(stem), options.source, lf.string());
    const double duration = probe_wav(wav->second).duration_s();
    for (const auto& r : recs) {
      if (r.offset_s > duration + 1e-3) {
        throw ValidationError(lf.string() + ": interval ending at " + std::to_string(r.offset_s) +
                              " s is past the end of " + wav->second.string() + " (" + std::to_string(duration) + " s)");
      }
    }
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  }
  if (!result.orphans.empty()) {
    std::string list;
    for (const auto& o : result.orphans) list += "\n  " + o.string();
    warn(std::to_string(result.orphans.size()) + " orphan label file(s):" + list);
  }
  if (result.records.empty()) warn("no labeled intervals found; writing an empty manifest");

  const fs::path base = fs::absolute(options.out_manifest).parent_path();
  std::vector<ManifestRecord> written = result.records;
  for (auto& r : written) r.audio_path = fs::relative(r.audio_path, base);
  std::vector<std::size_t> order(written.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return by_path_onset(written[a], written[b]); });
  std::vector<ManifestRecord> sorted_written, sorted_records;
  for (auto i : order) {
    sorted_written.push_back(written[i]);
    sorted_records.push_back(result.records[i]);
  }
  result.records = std::move(sorted_records);
  if (!options.out_manifest.parent_path().empty()) fs::create_directories(options.out_manifest.parent_path());
  write_manifest(options.out_manifest, sorted_written);

  out << "wrote " << result.records.size() << " record(s) to " << options.out_manifest.string() << "\n";
  out << "minutes per class and source\n";
  write_minutes_table(out, class_minutes(result.records));
  return result;
}

// ---- stats

NormStats cmd_stats(const StatsOptions& options, std::ostream& out) {
  options.config.validate();
  const auto records = load_manifest(options.manifest, options.config.check_audio);
  if (records.empty()) throw DataError("manifest " + options.manifest.string() + " has no records");
  out << "minutes per class and source\n";
  write_minutes_table(out, class_minutes(records));
  const auto parts = split(records, {0.8, options.config.train.seed});
  AudioLibrary lib;
  const auto train = extract_all(parts.train, lib);
  if (train.empty()) throw DataError("training split yields no 4 s segments");
  const NormStats stats = stats_for(train, options.config.frontend);
  const ClassCounts counts = count_by_class(train);
  out << "\ntrain records " << parts.train.size() << ", test records " << parts.test.size() << ", train segments "
      << train.size() << "\n";
  for (auto l : all_labels()) out << "  " << label_name(l) << ": " << counts[static_cast<std::size_t>(l)] << "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "normalization: mean %.6f std %.6f\n", stats.mean, stats.std);
  out << buf;
  if (options.out_json) {
    nlohmann::ordered_json j;
    j["mean"] = stats.mean;
    j["std"] = stats.std;
    j["train_segments"] = train.size();
    auto c = nlohmann::ordered_json::object();
    for (auto l : all_labels()) c[std::string(label_name(l))] = counts[static_cast<std::size_t>(l)];
    j["segments_per_class"] = c;
    write_text(*options.out_json, j.dump(2) + "\n");
  }
  return stats;
}

// ---- train

TrainSummary cmd_train(const TrainOptions& options, std::ostream& out) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  cfg.validate_paths();
  if (cfg.train.val_fraction <= 0.0) throw ConfigError("train.val_fraction must be positive to select a best model");
  set_gemm_threads(cfg.threads);
  fs::create_directories(options.out_dir);

  const Scheme scheme = cfg.train.scheme;
  const std::uint64_t seed = cfg.train.seed;
  AudioLibrary lib;
  std::optional<Corpus> pub, lb;
  if (scheme != Scheme::kResampled) pub = load_corpus(cfg.public_manifest, cfg, lib);
  if (scheme != Scheme::kPublic) lb = load_corpus(cfg.lb_manifest, cfg, lib);
  if (!lb && !cfg.lb_manifest.empty() && fs::exists(cfg.lb_manifest)) lb = load_corpus(cfg.lb_manifest, cfg, lib);

  Corpus& home = scheme == Scheme::kPublic ? *pub : *lb;
  auto [home_train, val] = holdout_split(home.train, cfg.train.val_fraction, seed);
  if (val.empty()) throw DataError("validation holdout is empty; need at least two training records");

  std::vector<Segment> public_train, lb_train;
  if (scheme == Scheme::kPublic) {
    public_train = std::move(home_train);
  } else {
    lb_train = std::move(home_train);
    if (pub) public_train = pub->train;
  }
  if (cfg.synth_white_noise > 0 && scheme != Scheme::kResampled) {
    auto noise = synthesize_white_noise(cfg.synth_white_noise, seed);
    public_train.insert(public_train.end(), noise.begin(), noise.end());
  }
  const auto train = compose_scheme(scheme, public_train, lb_train, cfg.train.oversample_cap, seed);
  if (train.empty()) throw DataError("composed training set is empty");
  const std::vector<Segment>& test = lb ? lb->test : pub->test;

  const NormStats stats = stats_for(train, cfg.frontend);
  Model<float> model(cfg.model);
  model.init(seed);

  std::ofstream epoch_log(options.out_dir / "epochs.jsonl", std::ios::trunc);
  if (!epoch_log) throw DataError("cannot write " + (options.out_dir / "epochs.jsonl").string());
  FitHooks<float> hooks;
  hooks.epoch_log = &epoch_log;
  hooks.on_epoch_end = [&](const EpochRecord& r, const Model<float>&) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %3d  lr %.3e  loss %.5f  val_f1 %.4f\n", r.epoch, r.lr, r.train_loss,
                  r.val_macro_f1);
    out << buf << std::flush;
    return false;
  };
  auto result = fit<float>(train, val, model, cfg.train, cfg.frontend, stats, hooks);

  save_checkpoint(options.out_dir / "model.astc", result.best, {result.best_epoch, result.best_f1}, stats);
  write_text(options.out_dir / "run.ini", render_run_config(cfg));

  TrainSummary summary;
  summary.best_epoch = result.best_epoch;
  summary.best_val_f1 = result.best_f1;
  summary.stats = stats;
  summary.train_segments = train.size();
  summary.val_segments = val.size();
  summary.test_segments = test.size();
  if (test.empty()) {
    warn("test split has no segments; no report written");
  } else {
    summary.test_report = evaluate(result.best, test, cfg.frontend, stats);
    write_text(options.out_dir / "report.json", emit_report(summary.test_report, ReportFormat::kJson));
    write_text(options.out_dir / "report.txt", emit_report(summary.test_report, ReportFormat::kText));
    out << "\n" << emit_report(summary.test_report, ReportFormat::kText);
  }
  out << "best epoch " << result.best_epoch << ", checkpoint " << (options.out_dir / "model.astc").string() << "\n";
  return summary;
}

// ---- eval

MetricsReport cmd_eval(const EvalCommandOptions& options, std::ostream& out) {
  if (options.part != SplitPart::kTest && !options.allow_train_eval) {
    throw ConfigError("refusing to evaluate on training data; pass --allow-train-eval to override");
  }
  const Checkpoint ckpt = read_checkpoint(options.checkpoint);
  const Model<float> model = model_from_checkpoint(ckpt);
  if (!ckpt.norm) throw ValidationError(options.checkpoint.string() + " carries no normalization stats");
  FrontendConfig fe;
  fe.n_mels = model.config().n_mels;

  const auto records = load_manifest(options.manifest, options.check_audio);
  const auto parts = split(records, {0.8, options.seed});
  std::vector<ManifestRecord> chosen;
  if (options.part != SplitPart::kTrain) chosen.insert(chosen.end(), parts.test.begin(), parts.test.end());
  if (options.part != SplitPart::kTest) chosen.insert(chosen.end(), parts.train.begin(), parts.train.end());
  AudioLibrary lib;
  const auto segments = extract_all(chosen, lib);
  if (segments.empty()) throw DataError("no 4 s segments to evaluate");
  const MetricsReport report = evaluate(model, segments, fe, *ckpt.norm, {options.mode, options.threshold});
  const std::string text = emit_report(report, ReportFormat::kText);
  if (options.out_prefix) {
    auto json_path = *options.out_prefix;
    json_path += ".json";
    auto text_path = *options.out_prefix;
    text_path += ".txt";
    write_text(json_path, emit_report(report, ReportFormat::kJson));
    write_text(text_path, text);
  }
  out << text;
  return report;
}

// ---- tag

std::vector<double> tag_window_starts(double duration_s, double hop_s) {
  if (!(hop_s > 0.0)) throw ConfigError("hop must be positive");
  if (duration_s + 1e-9 < kSegmentSeconds) {
    throw DataError("recording is " + std::to_string(duration_s) + " s; at least 4 s is needed");
  }
  std::vector<double> starts;
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * hop_s;
    if (s + kSegmentSeconds > duration_s + 1e-9) break;
    starts.push_back(s);
  }
  return starts;
}

std::size_t cmd_tag(const TagOptions& options, std::ostream& out) {
  const Checkpoint ckpt = read_checkpoint(options.checkpoint);
  const Model<float> model = model_from_checkpoint(ckpt);
  if (!ckpt.norm) throw ValidationError(options.checkpoint.string() + " carries no normalization stats");
  FrontendConfig fe;
  fe.n_mels = model.config().n_mels;
  Waveform w = read_wav(options.wav);
  if (w.sample_rate != kSegmentRate) w = resample(w, kSegmentRate);
  const auto starts = tag_window_starts(w.duration_s(), options.hop_s);
  const auto names = default_class_names();
  for (double s : starts) {
    auto first = static_cast<std::size_t>(std::llround(s * kSegmentRate));
    first = std::min(first, w.samples.size() - kSegmentSamples);
    const std::span<const float> window(w.samples.data() + first, kSegmentSamples);
    const auto probs = predict(model, model_input(window, fe, *ckpt.norm));
    nlohmann::ordered_json j;
    j["onset"] = s;
    j["offset"] = s + kSegmentSeconds;
    j["label"] = names[argmax(probs)];
    auto labels = nlohmann::ordered_json::array();
    for (auto l : predict_labels(probs, options.mode, options.threshold).labels()) {
      labels.push_back(std::string(label_name(l)));
    }
    j["labels"] = labels;
    auto p = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < probs.size(); ++c) p[names[c]] = probs[c];
    j["probs"] = p;
    out << json_line(j) << '\n';
  }
  return starts.size();
}

// ---- import-weights

namespace {

std::vector<NamedTensor> collect_raw_tensors(const fs::path& source) {
  std::vector<fs::path> files;
  if (fs::is_directory(source)) {
    for (const auto& e : fs::directory_iterator(source)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(source)) {
    files.push_back(source);
  } else {
    throw DataError("weights source not found: " + source.string());
  }
  std::vector<NamedTensor> out;
  std::set<std::string> seen;
  for (const auto& f : files) {
    const auto bytes = read_file(f);
    std::vector<NamedTensor> got;
    try {
      if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "ASTC")) {
        got = decode_archive(bytes);
      } else {
        std::size_t off = 0;
        got.push_back(read_tensor_entry(bytes, off));
        if (off != bytes.size()) throw ParseError("trailing bytes after the tensor entry");
      }
    } catch (const DataError& e) {
      throw ParseError(f.string() + ": " + e.what());
    }
    for (auto& t : got) {
      if (t.name.starts_with("meta/")) continue;
      if (!seen.insert(t.name).second) throw ParseError("tensor '" + t.name + "' appears more than once");
      out.push_back(std::move(t));
    }
  }
  return out;
}

bool is_square(std::size_t n, std::size_t& root) {
  root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  return root * root == n;
}

PatchGrid infer_pos_grid(std::size_t n_patches, const ModelConfig& cfg, bool freq_major) {
  const PatchGrid native = cfg.grid();
  std::size_t root = 0;
  const bool square = is_square(n_patches, root);
  if (freq_major && square) return {root, root};
  if (n_patches == native.count()) return native;
  if (n_patches % native.freq == 0) return {native.freq, n_patches / native.freq};
  if (square) return {root, root};
  throw ShapeError("cannot infer the positional grid of " + std::to_string(n_patches) +
                   " patch positions; pass --pos-grid FxT");
}

}  // namespace

ImportResult cmd_import_weights(const ImportOptions& options, std::ostream& out) {
  options.model.validate();
  auto tensors = collect_raw_tensors(options.source);
  Model<float> model(options.model);
  model.init(options.seed);
  const ModelConfig& mc = options.model;
  ImportResult result;

  for (auto& t : tensors) {
    if (!model.has(t.name)) {
      result.unmapped.push_back(t.name);
      continue;
    }
    const Shape want = model.expected_shape(t.name);
    Tensor<float> value(t.shape, t.data);
    bool adapted = false;
    if (t.name == "patch_embed.weight" && value.rank() == 4) {
      if (value.dim(0) == 3) {
        value = adapt_channel_weights(value);
        adapted = true;
      }
      if (value.dim(0) != 1 || value.dim(1) != mc.patch || value.dim(2) != mc.patch) {
        throw ShapeError("tensor 'patch_embed.weight' has shape " + shape_string(t.shape) + "; expected [3 or 1, " +
                         std::to_string(mc.patch) + ", " + std::to_string(mc.patch) + ", d]");
      }
      value = Tensor<float>(Shape{mc.patch_dim(), value.dim(3)}, {value.data().begin(), value.data().end()});
    }
    if ((t.name == "pos_embed" || t.name == "cls_token") && value.rank() == 3 && value.dim(0) == 1) {
      value = Tensor<float>(Shape{value.dim(1), value.dim(2)}, {value.data().begin(), value.data().end()});
    }
    if (t.name == "pos_embed" && value.rank() == 2 && value.dim(0) >= 2 && value.dim(1) == mc.embed_dim &&
        (value.shape() != want || options.pos_freq_major || options.pos_grid)) {
      const PatchGrid src = options.pos_grid ? *options.pos_grid
                                             : infer_pos_grid(value.dim(0) - 1, mc, options.pos_freq_major);
      const Tensor<float> grid = pos_table_to_grid(value, src, options.pos_freq_major);
      const std::size_t d = value.dim(1);
      Tensor<float> cls(Shape{d}, std::vector<float>(value.data().begin(), value.data().begin() + static_cast<long>(d)));
      value = pos_grid_to_table(cls, interpolate_pos_grid(grid, mc.grid()));
      adapted = true;
    }
    if (value.shape() != want) {
      throw ShapeError("tensor '" + t.name + "' has shape " + shape_string(t.shape) + ", model expects " +
                       shape_string(want));
    }
    auto dst = model.param(t.name).data();
    std::copy(value.data().begin(), value.data().end(), dst.begin());
    (adapted ? result.adapted : result.imported).push_back(t.name);
  }

  if (!result.unmapped.empty()) {
    std::string list;
    for (const auto& n : result.unmapped) list += "\n  " + n;
    if (!options.ignore_unmapped) {
      throw ConfigError(std::to_string(result.unmapped.size()) + " tensor(s) do not map onto the model" + list +
                        "\n(pass --ignore-unmapped to drop them)");
    }
    warn("dropping " + std::to_string(result.unmapped.size()) + " unmapped tensor(s):" + list);
  }
  std::set<std::string> loaded(result.imported.begin(), result.imported.end());
  loaded.insert(result.adapted.begin(), result.adapted.end());
  for (const auto& p : model.parameters()) {
    if (!loaded.count(p.name)) result.initialized.push_back(p.name);
  }
  save_checkpoint(options.out, model);
  out << "imported " << result.imported.size() << ", adapted " << result.adapted.size() << ", freshly initialized "
      << result.initialized.size() << ", unmapped " << result.unmapped.size() << "\n";
  for (const auto& n : result.adapted) out << "  adapted: " << n << "\n";
  for (const auto& n : result.initialized) out << "  initialized: " << n << "\n";
  out << "wrote " << options.out.string() << "\n";
  return result;
}

// ---- augment-preview

void cmd_augment_preview(const PreviewOptions& options, std::ostream& out) {
  const RunConfig& cfg = options.config;
  cfg.validate();
  Waveform w = read_wav(options.wav);
  if (w.sample_rate != kSegmentRate) w = resample(w, kSegmentRate);
  const auto first = static_cast<std::size_t>(std::llround(options.start_s * kSegmentRate));
  if (options.start_s < 0.0 || first + kSegmentSamples > w.samples.size()) {
    throw DataError("need 4 s of audio from " + std::to_string(options.start_s) + " s in " + options.wav.string());
  }
  Waveform clip{{w.samples.begin() + static_cast<long>(first),
                 w.samples.begin() + static_cast<long>(first + kSegmentSamples)},
                kSegmentRate};
  const LogMelSpectrogram raw = log_mel(clip, cfg.frontend);
  NormStats stats;
  if (options.checkpoint) {
    const auto ckpt = read_checkpoint(*options.checkpoint);
    if (!ckpt.norm) throw ValidationError(options.checkpoint->string() + " carries no normalization stats");
    stats = *ckpt.norm;
  } else {
    stats = compute_stats(std::span<const LogMelSpectrogram>(&raw, 1));
  }
  const AugmentConfig& ac = cfg.train.augment_config;
  ac.validate(raw.n_mels, raw.n_frames);
  Rng rng(derive_seed(options.seed, 0, 0));
  LogMelSpectrogram post = normalize(raw, stats);
  if (std::isfinite(ac.noise_snr_db)) post = normalize(log_mel(add_noise(clip, ac.noise_snr_db, rng), cfg.frontend), stats);
  post = time_mask(freq_mask(post, ac, rng), ac, rng);

  fs::create_directories(options.out_dir);
  write_spectrogram_csv(options.out_dir / "pre.csv", normalize(raw, stats));
  write_spectrogram_csv(options.out_dir / "post.csv", post);
  out << "wrote " << (options.out_dir / "pre.csv").string() << " and " << (options.out_dir / "post.csv").string()
      << " (" << raw.n_mels << "x" << raw.n_frames << ")\n";
}

}  // namespace cribtag
