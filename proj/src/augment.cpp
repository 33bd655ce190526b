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

#include "cribtag/augment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cribtag/error.hpp"
#include "cribtag/log.hpp"

namespace cribtag {

void AugmentConfig::validate(std::size_t n_mels, std::size_t n_frames) const {
  if (max_freq_mask > n_mels) {
    throw ConfigError("augment: max_freq_mask " + std::to_string(max_freq_mask) + " exceeds " +
                      std::to_string(n_mels) + " mel bins");
  }
  if (max_time_mask > n_frames) {
    throw ConfigError("augment: max_time_mask " + std::to_string(max_time_mask) + " exceeds " +
                      std::to_string(n_frames) + " frames");
  }
  if (std::isnan(noise_snr_db)) throw ConfigError("augment: noise_snr_db is NaN");
  if (!(noise_prob >= 0.0 && noise_prob <= 1.0) || !(mixup_prob >= 0.0 && mixup_prob <= 1.0)) {
    throw ConfigError("augment: probabilities must lie in [0, 1]");
  }
}

MaskSpan draw_mask(Rng& rng, std::size_t max_width, std::size_t extent) {
  const std::size_t cap = std::min(max_width, extent);
  const auto width = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(cap)));
  const auto start =
      static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(extent - width)));
  return {start, width};
}

LogMelSpectrogram apply_freq_mask(const LogMelSpectrogram& s, MaskSpan span, float fill) {
  if (span.start + span.width > s.n_mels) throw ContractError("frequency mask out of range");
  LogMelSpectrogram out = s;
  for (std::size_t m = span.start; m < span.start + span.width; ++m) {
    std::fill_n(out.values.begin() + static_cast<long>(m * s.n_frames), s.n_frames, fill);
  }
  return out;
}

LogMelSpectrogram apply_time_mask(const LogMelSpectrogram& s, MaskSpan span, float fill) {
  if (span.start + span.width > s.n_frames) throw ContractError("time mask out of range");
  LogMelSpectrogram out = s;
  for (std::size_t m = 0; m < s.n_mels; ++m) {
    for (std::size_t t = span.start; t < span.start + span.width; ++t) out.at(m, t) = fill;
  }
  return out;
}

LogMelSpectrogram freq_mask(const LogMelSpectrogram& s, const AugmentConfig& cfg, Rng& rng) {
  LogMelSpectrogram out = s;
  for (std::size_t i = 0; i < cfg.n_freq_masks; ++i) {
    out = apply_freq_mask(out, draw_mask(rng, cfg.max_freq_mask, s.n_mels), cfg.mask_fill);
  }
  return out;
}

LogMelSpectrogram time_mask(const LogMelSpectrogram& s, const AugmentConfig& cfg, Rng& rng) {
  LogMelSpectrogram out = s;
  for (std::size_t i = 0; i < cfg.n_time_masks; ++i) {
    out = apply_time_mask(out, draw_mask(rng, cfg.max_time_mask, s.n_frames), cfg.mask_fill);
  }
  return out;
}

double power(std::span<const float> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return acc / static_cast<double>(x.size());
}

Waveform add_noise(const Waveform& w, double snr_db, Rng& rng) {
  if (std::isnan(snr_db)) throw ContractError("add_noise: snr is NaN");
  if (snr_db == kNoNoise) return w;
  const double p_signal = power(w.samples);
  if (!std::isfinite(p_signal)) throw NumericError("add_noise: signal power is not finite");
  if (p_signal == 0.0) {
    warn("add_noise: silent input left unchanged");
    return w;
  }
  std::vector<double> noise(w.samples.size());
  double p_noise = 0.0;
  for (auto& v : noise) {
    v = standard_normal(rng);
    p_noise += v * v;
  }
  p_noise /= static_cast<double>(noise.size());
  const double k = std::sqrt(p_signal / (p_noise * std::pow(10.0, snr_db / 10.0)));
  Waveform out = w;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    out.samples[i] = static_cast<float>(w.samples[i] + k * noise[i]);
  }
  return out;
}

MixupRegion draw_mixup_region(Rng& rng, std::size_t n_mels, std::size_t n_frames) {
  MixupRegion r;
  r.freq = draw_mask(rng, n_mels, n_mels);
  r.time = draw_mask(rng, n_frames, n_frames);
  return r;
}

LabeledSpectrogram spec_mixup(const LabeledSpectrogram& a, const LabeledSpectrogram& b,
                              const MixupRegion& region) {
  if (a.spec.n_mels != b.spec.n_mels || a.spec.n_frames != b.spec.n_frames) {
    throw ShapeError("spec_mixup: shapes differ (" + std::to_string(a.spec.n_mels) + "x" +
                     std::to_string(a.spec.n_frames) + " vs " + std::to_string(b.spec.n_mels) + "x" +
                     std::to_string(b.spec.n_frames) + ")");
  }
  if (region.freq.start + region.freq.width > a.spec.n_mels ||
      region.time.start + region.time.width > a.spec.n_frames) {
    throw ContractError("spec_mixup: region out of range");
  }
  if (region.area() == 0) return a;
  LabeledSpectrogram out = a;
  for (std::size_t m = region.freq.start; m < region.freq.start + region.freq.width; ++m) {
    for (std::size_t t = region.time.start; t < region.time.start + region.time.width; ++t) {
      out.spec.at(m, t) = b.spec.at(m, t);
    }
  }
  out.labels = a.labels | b.labels;
  return out;
}

LabeledSpectrogram spec_mixup(const LabeledSpectrogram& a, const LabeledSpectrogram& b, Rng& rng) {
  return spec_mixup(a, b, draw_mixup_region(rng, a.spec.n_mels, a.spec.n_frames));
}

}  // namespace cribtag
