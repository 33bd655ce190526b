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

#include "cribtag/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "cribtag/error.hpp"
#include "cribtag/log.hpp"
#include "cribtag/random.hpp"

namespace cribtag {

namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "child_voice", "adult_speech", "tv", "percussive_noise", "white_noise", "music",
    "household_appliance"};

constexpr std::array<std::string_view, kNumSources> kSourceNames = {
    "CHIME_HOME", "ESC24", "GTZAN", "LIBRITTS", "LB_HOME", "SYNTH"};

std::string normalize_token(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '-' || c == ' ' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool by_path_onset(const ManifestRecord& a, const ManifestRecord& b) {
  if (a.audio_path != b.audio_path) return a.audio_path < b.audio_path;
  if (a.onset_s != b.onset_s) return a.onset_s < b.onset_s;
  return a.offset_s < b.offset_s;
}

ManifestRecord record_from_json(const nlohmann::json& j, std::size_t line_no,
                                const ManifestOptions& options) {
  const auto where = " on line " + std::to_string(line_no);
  for (const char* key : {"path", "onset_s", "offset_s", "labels", "family_id", "source"}) {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'" + where);
  }
  ManifestRecord r;
  try {
    r.audio_path = j.at("path").get<std::string>();
    r.onset_s = j.at("onset_s").get<double>();
    r.offset_s = j.at("offset_s").get<double>();
    r.family_id = j.at("family_id").get<std::string>();
    const auto source_text = j.at("source").get<std::string>();
    const auto source = parse_source(source_text);
    if (!source) throw ValidationError("unknown source '" + source_text + "'" + where);
    r.source = *source;
    for (const auto& l : j.at("labels")) {
      const auto text = l.get<std::string>();
      const auto label = parse_label(text);
      if (!label) throw ValidationError("unknown label '" + text + "'" + where);
      r.labels.add(*label);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field type") + where + ": " + e.what());
  }
  if (r.labels.empty()) throw ValidationError("empty label set" + where);
  if (!(r.onset_s >= 0.0 && r.onset_s < r.offset_s)) {
    throw ValidationError("need 0 <= onset_s < offset_s" + where);
  }
  if (r.audio_path.is_relative() && !options.base_dir.empty()) {
    r.audio_path = options.base_dir / r.audio_path;
  }
  if (options.check_audio) {
    const WavInfo info = probe_wav(r.audio_path);
    if (r.offset_s > info.duration_s() + 1e-3) {
      throw ValidationError("offset " + std::to_string(r.offset_s) + " s beyond end of " +
                            r.audio_path.string() + " (" + std::to_string(info.duration_s()) +
                            " s)" + where);
    }
  }
  return r;
}

std::vector<double> centered_window(double on, double off, double duration) {
  const double pad = (kSegmentSeconds - (off - on)) / 2.0;
  double start = on - pad;
  if (start < 0.0) start = 0.0;
  if (start + kSegmentSeconds > duration) start = duration - kSegmentSeconds;
  return {start, start + kSegmentSeconds};
}

}  // namespace

const std::array<Label, kNumClasses>& all_labels() {
  static const std::array<Label, kNumClasses> labels = {
      Label::kChildVoice, Label::kAdultSpeech, Label::kTv,  Label::kPercussiveNoise,
      Label::kWhiteNoise, Label::kMusic,       Label::kHouseholdAppliance};
  return labels;
}

std::string_view label_name(Label label) { return kLabelNames[static_cast<std::size_t>(label)]; }

std::optional<Label> parse_label(std::string_view text) {
  const std::string t = normalize_token(text);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (normalize_token(kLabelNames[i]) == t) return static_cast<Label>(i);
  }
  static const std::map<std::string, Label> aliases = {
      {"child", Label::kChildVoice},
      {"childvocalization", Label::kChildVoice},
      {"infant", Label::kChildVoice},
      {"adult", Label::kAdultSpeech},
      {"speech", Label::kAdultSpeech},
      {"male", Label::kAdultSpeech},
      {"female", Label::kAdultSpeech},
      {"maleadult", Label::kAdultSpeech},
      {"femaleadult", Label::kAdultSpeech},
      {"television", Label::kTv},
      {"percussive", Label::kPercussiveNoise},
      {"whitenoiseorsilence", Label::kWhiteNoise},
      {"silence", Label::kWhiteNoise},
      {"appliance", Label::kHouseholdAppliance},
      {"backgroundnoise", Label::kHouseholdAppliance},
      {"background", Label::kHouseholdAppliance},
  };
  if (auto it = aliases.find(t); it != aliases.end()) return it->second;
  return std::nullopt;
}

std::size_t LabelSet::size() const { return static_cast<std::size_t>(std::popcount(bits_)); }

Label LabelSet::primary() const {
  if (bits_ == 0) throw ContractError("primary() of an empty label set");
  return static_cast<Label>(std::countr_zero(bits_));
}

std::vector<Label> LabelSet::labels() const {
  std::vector<Label> out;
  for (auto l : all_labels()) {
    if (contains(l)) out.push_back(l);
  }
  return out;
}

std::string_view source_name(Source source) { return kSourceNames[static_cast<std::size_t>(source)]; }

std::optional<Source> parse_source(std::string_view text) {
  const std::string t = normalize_token(text);
  for (std::size_t i = 0; i < kNumSources; ++i) {
    if (normalize_token(kSourceNames[i]) == t) return static_cast<Source>(i);
  }
  if (t == "chime" || t == "chimehome") return Source::kChimeHome;
  if (t == "esc" || t == "esc50") return Source::kEsc24;
  if (t == "lb" || t == "lbhomeaudio") return Source::kLbHome;
  return std::nullopt;
}

bool is_public_source(Source source) {
  return source == Source::kChimeHome || source == Source::kEsc24 || source == Source::kGtzan ||
         source == Source::kLibriTts;
}

std::string ManifestRecord::key() const {
  std::ostringstream os;
  os << audio_path.generic_string() << '@' << std::setprecision(17) << onset_s << '-' << offset_s;
  return os.str();
}

std::vector<ManifestRecord> parse_manifest(std::istream& in, const ManifestOptions& options) {
  std::vector<ManifestRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("malformed JSON on line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + " is not a JSON object");
    records.push_back(record_from_json(j, line_no, options));
  }
  return records;
}

std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path, bool check_audio) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  ManifestOptions options;
  options.base_dir = path.parent_path();
  options.check_audio = check_audio;
  try {
    return parse_manifest(in, options);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_manifest(std::ostream& out, std::span<const ManifestRecord> records) {
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["path"] = r.audio_path.generic_string();
    j["onset_s"] = r.onset_s;
    j["offset_s"] = r.offset_s;
    auto labels = nlohmann::ordered_json::array();
    for (auto l : r.labels.labels()) labels.push_back(std::string(label_name(l)));
    j["labels"] = labels;
    j["family_id"] = r.family_id;
    j["source"] = std::string(source_name(r.source));
    out << j.dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRecord> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  write_manifest(out, records);
}

std::vector<WindowPlan> plan_windows(double onset_s, double offset_s, double file_duration_s) {
  if (file_duration_s + 1e-9 < kSegmentSeconds) return {};
  std::vector<WindowPlan> plan;
  const double length = offset_s - onset_s;
  const auto n_full = static_cast<std::size_t>(std::floor(length / kSegmentSeconds + 1e-9));
  for (std::size_t k = 0; k < n_full; ++k) {
    const double start = onset_s + kSegmentSeconds * static_cast<double>(k);
    plan.push_back({start, start + kSegmentSeconds});
  }
  double short_on = onset_s;
  bool want_short = n_full == 0;
  if (n_full > 0) {
    const double remainder = length - kSegmentSeconds * static_cast<double>(n_full);
    if (remainder >= kMinRemainderSeconds - 1e-9) {
      short_on = offset_s - remainder;
      want_short = true;
    }
  }
  if (want_short) {
    const auto w = centered_window(short_on, offset_s, file_duration_s);
    plan.push_back({w[0], w[1]});
  }
  return plan;
}

std::vector<Segment> extract_segments(const ManifestRecord& record, const Waveform& audio) {
  if (audio.sample_rate != kSegmentRate) {
    throw ContractError("extract_segments expects 16 kHz audio, got " +
                        std::to_string(audio.sample_rate) + " Hz");
  }
  if (audio.samples.size() < kSegmentSamples) {
    warn("skipping " + record.key() + ": file shorter than 4 s");
    return {};
  }
  const auto plan = plan_windows(record.onset_s, record.offset_s, audio.duration_s());
  std::vector<Segment> out;
  out.reserve(plan.size());
  const std::string key = record.key();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    auto start = static_cast<std::size_t>(std::llround(plan[i].start_s * kSegmentRate));
    start = std::min(start, audio.samples.size() - kSegmentSamples);
    auto samples = std::make_shared<std::vector<float>>(
        audio.samples.begin() + static_cast<long>(start),
        audio.samples.begin() + static_cast<long>(start + kSegmentSamples));
    Segment seg;
    seg.samples = std::move(samples);
    seg.labels = record.labels;
    seg.provenance = {key, i, plan[i].start_s, plan[i].end_s, record.source, record.family_id};
    out.push_back(std::move(seg));
  }
  return out;
}

const Waveform& AudioLibrary::get(const std::filesystem::path& path) {
  auto it = cache_.find(path);
  if (it != cache_.end()) return it->second;
  Waveform w = read_wav(path);
  if (w.sample_rate != kSegmentRate) w = resample(w, kSegmentRate);
  return cache_.emplace(path, std::move(w)).first->second;
}

std::vector<Segment> extract_all(std::span<const ManifestRecord> records, AudioLibrary& library) {
  std::vector<Segment> out;
  for (const auto& r : records) {
    auto segs = extract_segments(r, library.get(r.audio_path));
    out.insert(out.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
  }
  return out;
}

SplitResult split(std::span<const ManifestRecord> records, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("split: train fraction must lie in (0, 1)");
  }
  std::map<std::string, std::vector<ManifestRecord>> families;
  for (const auto& r : records) families[r.family_id].push_back(r);
  Rng rng(mix64(spec.seed));
  SplitResult result;
  for (auto& [family, recs] : families) {
    std::sort(recs.begin(), recs.end(), by_path_onset);
    std::shuffle(recs.begin(), recs.end(), rng);
    const std::size_t n = recs.size();
    std::size_t n_test = 0;
    if (n >= 2) {
      const auto want = static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - spec.train_fraction)));
      n_test = std::clamp<std::size_t>(want, 1, n - 1);
    }
    for (std::size_t i = 0; i < n; ++i) (i < n_test ? result.test : result.train).push_back(recs[i]);
  }
  std::sort(result.train.begin(), result.train.end(), by_path_onset);
  std::sort(result.test.begin(), result.test.end(), by_path_onset);
  return result;
}

ClassCounts count_by_class(std::span<const Segment> segments) {
  ClassCounts counts{};
  for (const auto& s : segments) counts[static_cast<std::size_t>(s.labels.primary())] += 1;
  return counts;
}

std::vector<Segment> balance_by_resampling(std::span<const Segment> segments, double cap,
                                           std::uint64_t seed, LabelSet required) {
  if (!(cap >= 1.0)) throw ContractError("balance_by_resampling: cap must be >= 1");
  std::array<std::vector<std::size_t>, kNumClasses> members;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    members[static_cast<std::size_t>(segments[i].labels.primary())].push_back(i);
  }
  for (auto l : required.labels()) {
    if (members[static_cast<std::size_t>(l)].empty()) {
      throw ValidationError("balance_by_resampling: class '" + std::string(label_name(l)) +
                            "' has no segments");
    }
  }
  std::size_t target = 0;
  for (const auto& m : members) target = std::max(target, m.size());

  std::vector<Segment> out(segments.begin(), segments.end());
  Rng rng(mix64(seed ^ 0x5a17ULL));
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = members[c];
    if (m.empty()) continue;
    const auto limit = static_cast<std::size_t>(std::floor(cap * static_cast<double>(m.size()) + 1e-9));
    const std::size_t want = std::min(target, limit);
    for (std::size_t k = m.size(); k < want; ++k) {
      const auto pick = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(m.size()) - 1));
      out.push_back(segments[m[pick]]);
    }
  }
  return out;
}

std::vector<float> white_noise_draws(std::size_t n, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, index, 0));
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

std::vector<Segment> synthesize_white_noise(std::size_t n_segments, std::uint64_t seed) {
  if (n_segments == 0) throw ContractError("synthesize_white_noise needs n >= 1");
  std::vector<Segment> out;
  out.reserve(n_segments);
  for (std::size_t i = 0; i < n_segments; ++i) {
    auto draws = white_noise_draws(kSegmentSamples, seed, i);
    for (auto& v : draws) v = std::clamp(v * kWhiteNoiseScale, -1.0f, 1.0f);
    Segment seg;
    seg.samples = std::make_shared<std::vector<float>>(std::move(draws));
    seg.labels = {Label::kWhiteNoise};
    seg.provenance = {"synth:" + std::to_string(seed) + ":" + std::to_string(i), 0, 0.0,
                      kSegmentSeconds, Source::kSynth, "synth"};
    out.push_back(std::move(seg));
  }
  return out;
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kPublic:
      return "PUBLIC";
    case Scheme::kResampled:
      return "RESAMPLED";
    case Scheme::kMixed:
      return "MIXED";
  }
  return "?";
}

std::optional<Scheme> parse_scheme(std::string_view text) {
  const std::string t = normalize_token(text);
  if (t == "public") return Scheme::kPublic;
  if (t == "resampled") return Scheme::kResampled;
  if (t == "mixed") return Scheme::kMixed;
  return std::nullopt;
}

std::vector<Segment> compose_scheme(Scheme scheme, std::span<const Segment> public_segments,
                                    std::span<const Segment> lb_segments, double cap,
                                    std::uint64_t seed) {
  const bool need_public = scheme != Scheme::kResampled;
  const bool need_lb = scheme != Scheme::kPublic;
  if (need_public && public_segments.empty()) {
    throw ConfigError(std::string(scheme_name(scheme)) + " scheme needs public segments");
  }
  if (need_lb && lb_segments.empty()) {
    throw ConfigError(std::string(scheme_name(scheme)) + " scheme needs LB home segments");
  }
  switch (scheme) {
    case Scheme::kPublic:
      return {public_segments.begin(), public_segments.end()};
    case Scheme::kResampled:
      return balance_by_resampling(lb_segments, cap, seed, LabelSet{});
    case Scheme::kMixed:
      break;
  }

  const ClassCounts lb_counts = count_by_class(lb_segments);
  const std::size_t target = *std::max_element(lb_counts.begin(), lb_counts.end());
  std::array<std::vector<std::size_t>, kNumClasses> pool;
  for (std::size_t i = 0; i < public_segments.size(); ++i) {
    pool[static_cast<std::size_t>(public_segments[i].labels.primary())].push_back(i);
  }
  std::vector<Segment> merged(lb_segments.begin(), lb_segments.end());
  Rng rng(mix64(seed ^ 0x313dULL));
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (lb_counts[c] >= target || pool[c].empty()) continue;
    auto& candidates = pool[c];
    std::shuffle(candidates.begin(), candidates.end(), rng);
    const std::size_t take = std::min(target - lb_counts[c], candidates.size());
    for (std::size_t k = 0; k < take; ++k) merged.push_back(public_segments[candidates[k]]);
  }
  const ClassCounts after = count_by_class(merged);
  const bool short_class = std::any_of(after.begin(), after.end(),
                                       [&](std::size_t n) { return n > 0 && n < target; });
  if (!short_class) return merged;
  return balance_by_resampling(merged, cap, seed, LabelSet{});
}

MinutesTable class_minutes(std::span<const ManifestRecord> records) {
  MinutesTable table{};
  for (const auto& r : records) {
    for (auto l : r.labels.labels()) {
      table[static_cast<std::size_t>(l)][static_cast<std::size_t>(r.source)] += r.duration_s() / 60.0;
    }
  }
  return table;
}

void write_minutes_table(std::ostream& out, const MinutesTable& table) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-20s", "class");
  out << buf;
  for (auto name : kSourceNames) {
    std::snprintf(buf, sizeof buf, " %11s", std::string(name).c_str());
    out << buf;
  }
  out << '\n';
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::snprintf(buf, sizeof buf, "%-20s", std::string(kLabelNames[c]).c_str());
    out << buf;
    for (std::size_t s = 0; s < kNumSources; ++s) {
      if (table[c][s] == 0.0) {
        std::snprintf(buf, sizeof buf, " %11s", "-");
      } else {
        std::snprintf(buf, sizeof buf, " %11.1f", table[c][s]);
      }
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace cribtag
