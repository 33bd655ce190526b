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

#include "cribtag/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "cribtag/dataset.hpp"
#include "cribtag/error.hpp"

namespace cribtag {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string where(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

std::size_t to_size(const std::string& v, const std::string& name) {
  std::size_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(name + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& v, const std::string& name) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(name + ": expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& name) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(name + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& v, const std::string& name) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || std::isnan(out)) {
    throw ConfigError(name + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v, const std::string& name) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(name + ": expected true/false, got '" + v + "'");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& v, const std::string& name, F convert) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(convert(item, name));
  }
  return out;
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

void IniDocument::set(const std::string& section, const std::string& key, std::string value) {
  sections_[section][key] = std::move(value);
}

std::optional<std::string> IniDocument::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

IniDocument parse_ini(std::istream& in, std::string_view source) {
  IniDocument doc;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto loc = std::string(source) + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(loc + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(loc + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!value.empty() && value.front() == '"') {
      const auto close = value.find('"', 1);
      if (close == std::string::npos) throw ConfigError(loc + ": unterminated string");
      value = value.substr(1, close - 1);
    } else {
      const auto hash = value.find_first_of("#;");
      if (hash != std::string::npos) value = trim(std::string_view(value).substr(0, hash));
    }
    if (key.empty()) throw ConfigError(loc + ": empty key");
    doc.set(section, key, value);
  }
  return doc;
}

IniDocument load_ini(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_ini(in, path.string());
}

void apply_override(IniDocument& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.substr(0, eq).find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like section.key=value");
  }
  doc.set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
          trim(assignment.substr(eq + 1)));
}

void RunConfig::validate() const {
  frontend.validate();
  model.validate();
  train.validate();
  if (frontend.sample_rate != kSegmentRate) throw ConfigError("frontend.sample_rate must be 16000");
  if (model.n_mels != frontend.n_mels) {
    throw ConfigError("model.n_mels " + std::to_string(model.n_mels) + " differs from frontend.n_mels " +
                      std::to_string(frontend.n_mels));
  }
  const std::size_t frames = frame_count(kSegmentSamples, frontend);
  if (model.n_frames != frames) {
    throw ConfigError("model.n_frames " + std::to_string(model.n_frames) + " differs from the " +
                      std::to_string(frames) + " frames of a 4 s segment");
  }
  if (train.augment) train.augment_config.validate(model.n_mels, model.n_frames);
  if (threads < 1) throw ConfigError("run.threads must be >= 1");
}

void RunConfig::validate_paths() const {
  auto need = [](const std::filesystem::path& p, const char* key) {
    if (p.empty()) throw ConfigError(std::string("data.") + key + " is required by the chosen scheme");
    if (!std::filesystem::exists(p)) throw DataError(std::string("data.") + key + " not found: " + p.string());
  };
  if (train.scheme != Scheme::kResampled) need(public_manifest, "public_manifest");
  if (train.scheme != Scheme::kPublic) need(lb_manifest, "lb_manifest");
}

RunConfig run_config_from(const IniDocument& doc) {
  RunConfig cfg;
  if (auto p = doc.get("model", "preset")) cfg.preset = *p;
  cfg.model = model_preset(cfg.preset);
  cfg.train = TrainConfig::preset(cfg.preset);

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, std::map<std::string, Setter>> table = {
      {"model",
       {
           {"preset", [](const std::string&, const std::string&) {}},
           {"embed_dim", [&](auto& v, auto& n) { cfg.model.embed_dim = to_size(v, n); }},
           {"n_layers", [&](auto& v, auto& n) { cfg.model.n_layers = to_size(v, n); }},
           {"n_heads", [&](auto& v, auto& n) { cfg.model.n_heads = to_size(v, n); }},
           {"mlp_ratio", [&](auto& v, auto& n) { cfg.model.mlp_ratio = to_size(v, n); }},
           {"patch", [&](auto& v, auto& n) { cfg.model.patch = to_size(v, n); }},
           {"overlap", [&](auto& v, auto& n) { cfg.model.overlap = to_size(v, n); }},
           {"n_mels", [&](auto& v, auto& n) { cfg.model.n_mels = to_size(v, n); }},
           {"n_frames", [&](auto& v, auto& n) { cfg.model.n_frames = to_size(v, n); }},
           {"head_dims", [&](auto& v, auto& n) { cfg.model.head_dims = to_list<std::size_t>(v, n, to_size); }},
           {"n_classes", [&](auto& v, auto& n) { cfg.model.n_classes = to_size(v, n); }},
           {"pooling",
            [&](auto& v, auto& n) {
              if (v == "mean") cfg.model.pooling = Pooling::kMean;
              else if (v == "cls") cfg.model.pooling = Pooling::kCls;
              else throw ConfigError(n + ": expected mean or cls");
            }},
       }},
      {"frontend",
       {
           {"win_length", [&](auto& v, auto& n) { cfg.frontend.win_length = to_size(v, n); }},
           {"hop", [&](auto& v, auto& n) { cfg.frontend.hop = to_size(v, n); }},
           {"fft_size", [&](auto& v, auto& n) { cfg.frontend.fft_size = to_size(v, n); }},
           {"n_mels", [&](auto& v, auto& n) { cfg.frontend.n_mels = to_size(v, n); }},
           {"fmin", [&](auto& v, auto& n) { cfg.frontend.fmin = to_double(v, n); }},
           {"fmax", [&](auto& v, auto& n) { cfg.frontend.fmax = to_double(v, n); }},
           {"log_floor", [&](auto& v, auto& n) { cfg.frontend.log_floor = to_double(v, n); }},
       }},
      {"augment",
       {
           {"enabled", [&](auto& v, auto& n) { cfg.train.augment = to_bool(v, n); }},
           {"max_freq_mask", [&](auto& v, auto& n) { cfg.train.augment_config.max_freq_mask = to_size(v, n); }},
           {"max_time_mask", [&](auto& v, auto& n) { cfg.train.augment_config.max_time_mask = to_size(v, n); }},
           {"n_freq_masks", [&](auto& v, auto& n) { cfg.train.augment_config.n_freq_masks = to_size(v, n); }},
           {"n_time_masks", [&](auto& v, auto& n) { cfg.train.augment_config.n_time_masks = to_size(v, n); }},
           {"noise_snr_db", [&](auto& v, auto& n) { cfg.train.augment_config.noise_snr_db = to_double(v, n); }},
           {"noise_prob", [&](auto& v, auto& n) { cfg.train.augment_config.noise_prob = to_double(v, n); }},
           {"mixup", [&](auto& v, auto& n) { cfg.train.augment_config.mixup_enabled = to_bool(v, n); }},
           {"mixup_prob", [&](auto& v, auto& n) { cfg.train.augment_config.mixup_prob = to_double(v, n); }},
           {"mask_fill",
            [&](auto& v, auto& n) { cfg.train.augment_config.mask_fill = static_cast<float>(to_double(v, n)); }},
       }},
      {"train",
       {
           {"epochs", [&](auto& v, auto& n) { cfg.train.epochs = to_int(v, n); }},
           {"lr", [&](auto& v, auto& n) { cfg.train.lr0 = to_double(v, n); }},
           {"gamma", [&](auto& v, auto& n) { cfg.train.gamma = to_double(v, n); }},
           {"milestones", [&](auto& v, auto& n) { cfg.train.milestones = to_list<int>(v, n, to_int); }},
           {"milestone_every", [&](auto& v, auto& n) { cfg.train.milestone_every = to_int(v, n); }},
           {"batch_size", [&](auto& v, auto& n) { cfg.train.batch_size = to_size(v, n); }},
           {"freeze",
            [&](auto& v, auto& n) {
              const auto p = parse_freeze_policy(v);
              if (!p) throw ConfigError(n + ": expected WHOLE_MODEL or LAST_TWO_LAYERS, got '" + v + "'");
              cfg.train.freeze = *p;
            }},
           {"scheme",
            [&](auto& v, auto& n) {
              const auto s = parse_scheme(v);
              if (!s) throw ConfigError(n + ": expected PUBLIC, RESAMPLED or MIXED, got '" + v + "'");
              cfg.train.scheme = *s;
            }},
           {"cap", [&](auto& v, auto& n) { cfg.train.oversample_cap = to_double(v, n); }},
           {"seed", [&](auto& v, auto& n) { cfg.train.seed = to_u64(v, n); }},
           {"val_fraction", [&](auto& v, auto& n) { cfg.train.val_fraction = to_double(v, n); }},
       }},
      {"data",
       {
           {"public_manifest", [&](auto& v, auto&) { cfg.public_manifest = v; }},
           {"lb_manifest", [&](auto& v, auto&) { cfg.lb_manifest = v; }},
           {"synth_white_noise", [&](auto& v, auto& n) { cfg.synth_white_noise = to_size(v, n); }},
           {"check_audio", [&](auto& v, auto& n) { cfg.check_audio = to_bool(v, n); }},
       }},
      {"run",
       {
           {"threads", [&](auto& v, auto& n) { cfg.threads = to_int(v, n); }},
       }},
  };

  for (const auto& [section, keys] : doc.sections()) {
    const auto sec = table.find(section);
    if (sec == table.end()) {
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("unknown config key " + where(section, key));
      setter->second(value, where(section, key));
    }
  }
  return cfg;
}

std::string render_run_config(const RunConfig& c) {
  std::ostringstream os;
  const auto& m = c.model;
  os << "[model]\n"
     << "preset = " << c.preset << "\n"
     << "embed_dim = " << m.embed_dim << "\nn_layers = " << m.n_layers << "\nn_heads = " << m.n_heads
     << "\nmlp_ratio = " << m.mlp_ratio << "\npatch = " << m.patch << "\noverlap = " << m.overlap
     << "\nn_mels = " << m.n_mels << "\nn_frames = " << m.n_frames << "\nhead_dims = " << join(m.head_dims)
     << "\nn_classes = " << m.n_classes << "\npooling = " << (m.pooling == Pooling::kCls ? "cls" : "mean") << "\n\n";
  const auto& f = c.frontend;
  os << "[frontend]\n"
     << "win_length = " << f.win_length << "\nhop = " << f.hop << "\nfft_size = " << f.fft_size
     << "\nn_mels = " << f.n_mels << "\nfmin = " << fmt_double(f.fmin) << "\nfmax = " << fmt_double(f.fmax)
     << "\nlog_floor = " << fmt_double(f.log_floor) << "\n\n";
  const auto& a = c.train.augment_config;
  os << "[augment]\n"
     << "enabled = " << (c.train.augment ? "true" : "false") << "\nmax_freq_mask = " << a.max_freq_mask
     << "\nmax_time_mask = " << a.max_time_mask << "\nn_freq_masks = " << a.n_freq_masks
     << "\nn_time_masks = " << a.n_time_masks << "\nnoise_snr_db = " << fmt_double(a.noise_snr_db)
     << "\nnoise_prob = " << fmt_double(a.noise_prob) << "\nmixup = " << (a.mixup_enabled ? "true" : "false")
     << "\nmixup_prob = " << fmt_double(a.mixup_prob) << "\nmask_fill = " << fmt_double(a.mask_fill) << "\n\n";
  const auto& t = c.train;
  os << "[train]\n"
     << "epochs = " << t.epochs << "\nlr = " << fmt_double(t.lr0) << "\ngamma = " << fmt_double(t.gamma)
     << "\nmilestones = " << join(t.resolved_milestones()) << "\nmilestone_every = " << t.milestone_every
     << "\nbatch_size = " << t.batch_size << "\nfreeze = " << freeze_policy_name(t.freeze)
     << "\nscheme = " << scheme_name(t.scheme) << "\ncap = " << fmt_double(t.oversample_cap)
     << "\nseed = " << t.seed << "\nval_fraction = " << fmt_double(t.val_fraction) << "\n\n";
  os << "[data]\n"
     << "public_manifest = \"" << c.public_manifest.generic_string() << "\"\nlb_manifest = \""
     << c.lb_manifest.generic_string() << "\"\nsynth_white_noise = " << c.synth_white_noise
     << "\ncheck_audio = " << (c.check_audio ? "true" : "false") << "\n\n";
  os << "[run]\nthreads = " << c.threads << "\n";
  return os.str();
}

}  // namespace cribtag
