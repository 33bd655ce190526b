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

// Labeled-interval manifests, 4 s segment extraction, family-stratified
// splitting, class balancing, and composition of the training schemes.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cribtag/audio.hpp"

namespace cribtag {

enum class Label : std::uint8_t {
  kChildVoice = 0,
  kAdultSpeech,
  kTv,
  kPercussiveNoise,
  kWhiteNoise,
  kMusic,
  kHouseholdAppliance,
};

inline constexpr std::size_t kNumClasses = 7;

const std::array<Label, kNumClasses>& all_labels();
std::string_view label_name(Label label);
// Accepts canonical snake_case names, CamelCase names, and the annotation
// aliases used by interval files ("child", "male", "female", "tv", ...).
std::optional<Label> parse_label(std::string_view text);

class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<Label> labels) {
    for (auto l : labels) add(l);
  }
  static LabelSet from_bits(std::uint8_t bits) { return LabelSet(bits); }

  void add(Label l) { bits_ |= bit(l); }
  bool contains(Label l) const { return (bits_ & bit(l)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  // Lowest-index member; the class a segment is counted under when balancing
  // and its truth in single-label evaluation.
  Label primary() const;
  std::vector<Label> labels() const;
  std::uint8_t bits() const { return bits_; }
  LabelSet operator|(LabelSet o) const { return LabelSet(static_cast<std::uint8_t>(bits_ | o.bits_)); }
  bool operator==(const LabelSet&) const = default;

 private:
  explicit LabelSet(std::uint8_t bits) : bits_(bits) {}
  static std::uint8_t bit(Label l) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(l)); }
  std::uint8_t bits_ = 0;
};

enum class Source : std::uint8_t {
  kChimeHome = 0,
  kEsc24,
  kGtzan,
  kLibriTts,
  kLbHome,
  kSynth,
};

inline constexpr std::size_t kNumSources = 6;

std::string_view source_name(Source source);
std::optional<Source> parse_source(std::string_view text);
bool is_public_source(Source source);

struct ManifestRecord {
  std::filesystem::path audio_path;
  double onset_s = 0.0;
  double offset_s = 0.0;
  LabelSet labels;
  std::string family_id;
  Source source = Source::kLbHome;

  double duration_s() const { return offset_s - onset_s; }
  // Stable identity: "path@onset-offset".
  std::string key() const;
};

struct ManifestOptions {
  // Resolve relative paths against this directory.
  std::filesystem::path base_dir;
  // Probe each audio header and reject intervals past the end of the file.
  bool check_audio = true;
};

std::vector<ManifestRecord> parse_manifest(std::istream& in, const ManifestOptions& options);
std::vector<ManifestRecord> load_manifest(const std::filesystem::path& path, bool check_audio = true);
void write_manifest(std::ostream& out, std::span<const ManifestRecord> records);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestRecord> records);

inline constexpr int kSegmentRate = 16000;
inline constexpr std::size_t kSegmentSamples = 64000;
inline constexpr double kSegmentSeconds = 4.0;
// Trailing tiling remainders shorter than this are dropped.
inline constexpr double kMinRemainderSeconds = 1.0;

struct Provenance {
  std::string record_key;
  std::size_t window_index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  Source source = Source::kLbHome;
  std::string family_id;

  // Identity of the underlying audio window; duplicates from oversampling
  // share it.
  std::string id() const { return record_key + "#" + std::to_string(window_index); }
};

// Exactly four seconds of 16 kHz audio. Sample storage is shared, so copies
// made by oversampling are cheap.
struct Segment {
  std::shared_ptr<const std::vector<float>> samples;
  LabelSet labels;
  Provenance provenance;

  std::span<const float> audio() const { return *samples; }
  Waveform waveform() const { return {*samples, kSegmentRate}; }
};

struct WindowPlan {
  double start_s = 0.0;
  double end_s = 0.0;
};

// Window placement for one labeled interval. Intervals of at least 4 s are
// tiled into consecutive 4 s windows; a shorter interval (or a trailing
// remainder of at least kMinRemainderSeconds) gets one window centered on it,
// with a deficit on one side moved to the other. Empty when the file itself is
// shorter than 4 s.
std::vector<WindowPlan> plan_windows(double onset_s, double offset_s, double file_duration_s);

// `audio` must already be at 16 kHz.
std::vector<Segment> extract_segments(const ManifestRecord& record, const Waveform& audio);

// Loads and resamples audio files once.
class AudioLibrary {
 public:
  const Waveform& get(const std::filesystem::path& path);

 private:
  std::map<std::filesystem::path, Waveform> cache_;
};

std::vector<Segment> extract_all(std::span<const ManifestRecord> records, AudioLibrary& library);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct SplitResult {
  std::vector<ManifestRecord> train;
  std::vector<ManifestRecord> test;
};

// Per-family random partition at record granularity. Every family with at
// least two records lands in both sides.
SplitResult split(std::span<const ManifestRecord> records, const SplitSpec& spec);

using ClassCounts = std::array<std::size_t, kNumClasses>;
ClassCounts count_by_class(std::span<const Segment> segments);

// Oversamples each class with replacement toward the largest class count,
// never beyond cap x its original count. Originals are kept in order; copies
// are appended. Every class in `required` must be present.
std::vector<Segment> balance_by_resampling(std::span<const Segment> segments, double cap,
                                           std::uint64_t seed,
                                           LabelSet required = LabelSet::from_bits(0x7f));

// Amplitude applied to unit-variance noise before clipping to [-1, 1].
inline constexpr float kWhiteNoiseScale = 0.1f;

// Unit-variance Gaussian draws for synthetic segment `index`.
std::vector<float> white_noise_draws(std::size_t n, std::uint64_t seed, std::size_t index);
std::vector<Segment> synthesize_white_noise(std::size_t n_segments, std::uint64_t seed);

enum class Scheme { kPublic, kResampled, kMixed };

std::string_view scheme_name(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view text);

// PUBLIC: public segments as-is. RESAMPLED: balance_by_resampling(lb).
// MIXED: lb plus public segments drawn per class toward the largest lb class
// count, oversampling only whatever gap remains.
std::vector<Segment> compose_scheme(Scheme scheme, std::span<const Segment> public_segments,
                                    std::span<const Segment> lb_segments, double cap,
                                    std::uint64_t seed);

// Minutes of labeled audio per (label, source); multi-label intervals count
// toward each of their labels.
using MinutesTable = std::array<std::array<double, kNumSources>, kNumClasses>;
MinutesTable class_minutes(std::span<const ManifestRecord> records);
void write_minutes_table(std::ostream& out, const MinutesTable& table);

}  // namespace cribtag
