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

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cribtag/commands.hpp"
#include "cribtag/error.hpp"
#include "cribtag/log.hpp"
#include "cribtag/ops.hpp"
#include "cribtag/random.hpp"

namespace {

using cribtag::RunConfig;

// Flags shared by every command that reads a run config.
struct ConfigFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::string> preset;
  std::optional<std::string> scheme;
  std::optional<std::string> freeze;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> public_manifest;
  std::optional<std::string> lb_manifest;

  void attach(CLI::App* app, bool with_training = true) {
    app->add_option("-c,--config", config, "Run config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override a config value: section.key=value (repeatable)");
    app->add_option("--preset", preset, "Model preset: base or tiny");
    app->add_option("--seed", seed, "Global seed (falls back to CRIBTAG_SEED)");
    app->add_option("--threads", threads, "Worker threads for matrix kernels");
    if (!with_training) return;
    app->add_option("--scheme", scheme, "PUBLIC, RESAMPLED or MIXED");
    app->add_option("--freeze", freeze, "LAST_TWO_LAYERS or WHOLE_MODEL");
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--lr", lr, "Initial learning rate");
    app->add_option("--public", public_manifest, "Public-corpus manifest");
    app->add_option("--lb", lb_manifest, "Home-recording manifest");
  }

  RunConfig build() const {
    cribtag::IniDocument doc;
    if (!config.empty()) doc = cribtag::load_ini(config);
    if (preset) doc.set("model", "preset", *preset);
    for (const auto& s : sets) cribtag::apply_override(doc, s);
    if (scheme) doc.set("train", "scheme", *scheme);
    if (freeze) doc.set("train", "freeze", *freeze);
    if (epochs) doc.set("train", "epochs", std::to_string(*epochs));
    if (lr) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", *lr);
      doc.set("train", "lr", buf);
    }
    if (threads) doc.set("run", "threads", std::to_string(*threads));
    if (public_manifest) doc.set("data", "public_manifest", *public_manifest);
    if (lb_manifest) doc.set("data", "lb_manifest", *lb_manifest);
    if (seed) {
      doc.set("train", "seed", std::to_string(*seed));
    } else if (!doc.get("train", "seed")) {
      doc.set("train", "seed", std::to_string(cribtag::seed_from_env(0)));
    }
    RunConfig cfg = cribtag::run_config_from(doc);
    cribtag::set_gemm_threads(cfg.threads);
    return cfg;
  }
};

cribtag::PredictionMode mode_from(bool multi) {
  return multi ? cribtag::PredictionMode::kMultiLabel : cribtag::PredictionMode::kSingleLabel;
}

std::optional<cribtag::PatchGrid> parse_grid(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t a = 0, b = 0;
    const auto f = std::stoul(text.substr(0, x), &a);
    const auto t = std::stoul(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1 || f == 0 || t == 0) throw std::invalid_argument(text);
    return cribtag::PatchGrid{f, t};
  } catch (const std::logic_error&) {
    throw cribtag::ConfigError("--pos-grid expects FxT, got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cribtag: sound-event tagging for home audio recordings"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  // prepare
  cribtag::PrepareOptions prep;
  std::string prep_source = "lb_home";
  auto* prepare = app.add_subcommand("prepare", "Pair interval label files with WAVs and write a manifest");
  prepare->add_option("--labels", prep.label_dir, "Directory of interval files (.txt/.tsv/.lab)")->required();
  prepare->add_option("--wavs", prep.wav_dir, "Directory of WAV files")->required();
  prepare->add_option("-o,--out", prep.out_manifest, "Output JSONL manifest")->required();
  prepare->add_option("--source", prep_source, "Source corpus tag for every record");

  // stats
  ConfigFlags stats_flags;
  std::string stats_manifest;
  std::string stats_json;
  auto* stats = app.add_subcommand("stats", "Class minutes, segment counts and normalization stats");
  stats_flags.attach(stats, false);
  stats->add_option("-m,--manifest", stats_manifest, "Manifest to summarize")->required();
  stats->add_option("--json", stats_json, "Also write the stats as JSON");

  // train
  ConfigFlags train_flags;
  std::string train_out;
  auto* train = app.add_subcommand("train", "Compose the training set, fit, and report on the test split");
  train_flags.attach(train);
  train->add_option("-o,--out", train_out, "Output directory")->required();

  // eval
  cribtag::EvalCommandOptions ev;
  std::string ev_part = "test";
  std::optional<std::uint64_t> ev_seed;
  bool ev_multi = false;
  bool ev_no_check = false;
  std::string ev_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval->add_option("-m,--manifest", ev.manifest, "Manifest")->required();
  eval->add_option("--part", ev_part, "test, train or all")->check(CLI::IsMember({"test", "train", "all"}));
  eval->add_flag("--allow-train-eval", ev.allow_train_eval, "Permit evaluating training records");
  eval->add_option("--seed", ev_seed, "Split seed used at training time (falls back to CRIBTAG_SEED)");
  eval->add_flag("--multi-label", ev_multi, "Threshold every class instead of taking the argmax");
  eval->add_option("--threshold", ev.threshold, "Multi-label threshold");
  eval->add_flag("--no-check-audio", ev_no_check, "Skip probing audio headers while loading the manifest");
  eval->add_option("-o,--out", ev_out, "Write <prefix>.json and <prefix>.txt");

  // tag
  cribtag::TagOptions tg;
  bool tg_multi = false;
  std::string tg_out;
  auto* tag = app.add_subcommand("tag", "Tag a long recording in 4 s windows (JSON lines)");
  tag->add_option("--checkpoint", tg.checkpoint, "Checkpoint file")->required();
  tag->add_option("--wav", tg.wav, "Recording")->required();
  tag->add_option("--hop", tg.hop_s, "Window hop in seconds");
  tag->add_flag("--multi-label", tg_multi, "Threshold every class instead of taking the argmax");
  tag->add_option("--threshold", tg.threshold, "Multi-label threshold");
  tag->add_option("-o,--out", tg_out, "Output file (stdout when absent)");

  // import-weights
  ConfigFlags imp_flags;
  cribtag::ImportOptions imp;
  std::string imp_grid;
  auto* import = app.add_subcommand("import-weights", "Convert raw named tensors into a native checkpoint");
  imp_flags.attach(import, false);
  import->add_option("--source", imp.source, "Directory of raw tensor files, or one archive")->required();
  import->add_option("-o,--out", imp.out, "Output checkpoint")->required();
  import->add_option("--pos-grid", imp_grid, "Source positional grid FxT");
  import->add_flag("--pos-freq-major", imp.pos_freq_major, "Source positions are listed frequency-major");
  import->add_flag("--ignore-unmapped", imp.ignore_unmapped, "Drop tensors that do not map onto the model");

  // augment-preview
  ConfigFlags prev_flags;
  cribtag::PreviewOptions pv;
  std::string pv_ckpt;
  auto* preview = app.add_subcommand("augment-preview", "Write a clip's spectrogram before and after augmentation");
  prev_flags.attach(preview, false);
  preview->add_option("--wav", pv.wav, "Recording")->required();
  preview->add_option("-o,--out", pv.out_dir, "Output directory")->required();
  preview->add_option("--start", pv.start_s, "Clip start in seconds");
  preview->add_option("--checkpoint", pv_ckpt, "Take normalization stats from this checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(cribtag::ExitCode::kConfig);
  }
  cribtag::set_verbose(verbose);

  try {
    if (prepare->parsed()) {
      const auto src = cribtag::parse_source(prep_source);
      if (!src) throw cribtag::ConfigError("unknown source '" + prep_source + "'");
      prep.source = *src;
      cribtag::cmd_prepare(prep, std::cout);
    } else if (stats->parsed()) {
      cribtag::StatsOptions o;
      o.config = stats_flags.build();
      o.manifest = stats_manifest;
      if (!stats_json.empty()) o.out_json = stats_json;
      cribtag::cmd_stats(o, std::cout);
    } else if (train->parsed()) {
      cribtag::cmd_train({train_flags.build(), train_out}, std::cout);
    } else if (eval->parsed()) {
      ev.part = ev_part == "train" ? cribtag::SplitPart::kTrain
                : ev_part == "all" ? cribtag::SplitPart::kAll
                                   : cribtag::SplitPart::kTest;
      ev.seed = ev_seed ? *ev_seed : cribtag::seed_from_env(0);
      ev.mode = mode_from(ev_multi);
      ev.check_audio = !ev_no_check;
      if (!ev_out.empty()) ev.out_prefix = ev_out;
      cribtag::cmd_eval(ev, std::cout);
    } else if (tag->parsed()) {
      tg.mode = mode_from(tg_multi);
      if (tg_out.empty()) {
        cribtag::cmd_tag(tg, std::cout);
      } else {
        std::ofstream f(tg_out, std::ios::trunc);
        if (!f) throw cribtag::DataError("cannot write " + tg_out);
        const auto n = cribtag::cmd_tag(tg, f);
        std::cout << "wrote " << n << " window(s) to " << tg_out << "\n";
      }
    } else if (import->parsed()) {
      const RunConfig cfg = imp_flags.build();
      imp.model = cfg.model;
      imp.seed = cfg.train.seed;
      imp.pos_grid = parse_grid(imp_grid);
      cribtag::cmd_import_weights(imp, std::cout);
    } else if (preview->parsed()) {
      pv.config = prev_flags.build();
      pv.seed = pv.config.train.seed;
      if (!pv_ckpt.empty()) pv.checkpoint = pv_ckpt;
      cribtag::cmd_augment_preview(pv, std::cout);
    }
  } catch (const cribtag::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(cribtag::ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(cribtag::ExitCode::kConfig);
  }
  return 0;
}
