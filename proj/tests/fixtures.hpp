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

// Synthetic audio and scratch directories shared by the tests.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "cribtag/audio.hpp"
#include "cribtag/dataset.hpp"
#include "cribtag/random.hpp"

namespace cribtag::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cribtag_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<float> sine(double hz, double seconds, double amp = 0.5, int rate = 16000, double phase = 0.0) {
  std::vector<float> x(static_cast<std::size_t>(std::llround(seconds * rate)));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate + phase));
  }
  return x;
}

// Class c sounds like a pair of partials at 250 * 1.7^c Hz and twice that.
inline double tone_hz(Label label) { return 250.0 * std::pow(1.7, static_cast<int>(label)); }

// Background hum that marks a recording domain; amplitude 0 disables it.
struct Domain {
  double background_hz = 0.0;
  double background_amp = 0.0;
  double tone_amp = 0.3;
  double noise_amp = 0.01;
};

inline std::vector<float> tone_clip(Label label, std::uint64_t seed, const Domain& domain = {}) {
  Rng rng(mix64(seed));
  std::uniform_real_distribution<double> jitter(0.97, 1.03), ph(0.0, 2.0 * std::numbers::pi);
  const double f = tone_hz(label) * jitter(rng);
  const double p1 = ph(rng), p2 = ph(rng), pb = ph(rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<float> x(kSegmentSamples);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = static_cast<double>(i) / kSegmentRate;
    double v = domain.tone_amp * (std::sin(2 * std::numbers::pi * f * t + p1) +
                                  0.5 * std::sin(2 * std::numbers::pi * 2 * f * t + p2));
    if (domain.background_amp > 0) v += domain.background_amp * std::sin(2 * std::numbers::pi * domain.background_hz * t + pb);
    v += domain.noise_amp * noise(rng);
    x[i] = static_cast<float>(v);
  }
  return x;
}

inline Segment make_segment(std::vector<float> samples, LabelSet labels, const std::string& key, Source source,
                            const std::string& family) {
  Segment s;
  s.samples = std::make_shared<const std::vector<float>>(std::move(samples));
  s.labels = labels;
  s.provenance.record_key = key;
  s.provenance.end_s = kSegmentSeconds;
  s.provenance.source = source;
  s.provenance.family_id = family;
  return s;
}

// n_per_class single-label tone segments per class, each its own record.
inline std::vector<Segment> tone_dataset(std::size_t n_per_class, std::uint64_t seed, const Domain& domain = {},
                                         Source source = Source::kLbHome, const std::string& tag = "tone") {
  std::vector<Segment> out;
  for (auto l : all_labels()) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(l) * 100003 + i, 0);
      const std::string key = tag + "_" + std::string(label_name(l)) + "_" + std::to_string(i);
      out.push_back(make_segment(tone_clip(l, s, domain), LabelSet{l}, key, source, tag));
    }
  }
  return out;
}

inline void write_wav_file(const std::filesystem::path& path, std::vector<float> samples, int rate = 16000) {
  write_wav(path, Waveform{std::move(samples), rate});
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

}  // namespace cribtag::testing
