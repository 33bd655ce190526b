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

// Training-time augmentation: frequency/time masking on normalized
// spectrograms, additive Gaussian noise at a target SNR on waveforms, and a
// region-splicing mixup that is off by default.

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

#include "cribtag/audio.hpp"
#include "cribtag/dataset.hpp"
#include "cribtag/frontend.hpp"
#include "cribtag/random.hpp"

namespace cribtag {

struct AugmentConfig {
  std::size_t max_freq_mask = 24;
  std::size_t max_time_mask = 96;
  std::size_t n_freq_masks = 1;
  std::size_t n_time_masks = 1;
  // +inf disables noise.
  double noise_snr_db = 20.0;
  // Chance that a training sample gets noise in a given epoch.
  double noise_prob = 0.5;
  bool mixup_enabled = false;
  double mixup_prob = 0.5;
  float mask_fill = 0.0f;
  std::uint64_t seed = 0;

  void validate(std::size_t n_mels, std::size_t n_frames) const;
};

// Contiguous [start, start + width) span along one axis.
struct MaskSpan {
  std::size_t start = 0;
  std::size_t width = 0;
};

// width ~ U{0..max_width}, start ~ U{0..extent - width}.
MaskSpan draw_mask(Rng& rng, std::size_t max_width, std::size_t extent);

LogMelSpectrogram apply_freq_mask(const LogMelSpectrogram& s, MaskSpan span, float fill);
LogMelSpectrogram apply_time_mask(const LogMelSpectrogram& s, MaskSpan span, float fill);

// n_freq_masks (resp. n_time_masks) independent draws.
LogMelSpectrogram freq_mask(const LogMelSpectrogram& s, const AugmentConfig& cfg, Rng& rng);
LogMelSpectrogram time_mask(const LogMelSpectrogram& s, const AugmentConfig& cfg, Rng& rng);

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Adds Gaussian noise rescaled so that the realized signal-to-noise ratio is
// exactly snr_db. Silent input comes back unchanged with a warning. Samples
// are not clipped.
Waveform add_noise(const Waveform& w, double snr_db, Rng& rng);

double power(std::span<const float> x);

struct MixupRegion {
  MaskSpan freq;
  MaskSpan time;
  std::size_t area() const { return freq.width * time.width; }
};

struct LabeledSpectrogram {
  LogMelSpectrogram spec;
  LabelSet labels;
};

// Width and start drawn like the masks, bounded by the full extent.
MixupRegion draw_mixup_region(Rng& rng, std::size_t n_mels, std::size_t n_frames);

// Copies b's values into `region` of a; labels become the union. A zero-area
// region leaves a and its labels untouched.
LabeledSpectrogram spec_mixup(const LabeledSpectrogram& a, const LabeledSpectrogram& b,
                              const MixupRegion& region);
LabeledSpectrogram spec_mixup(const LabeledSpectrogram& a, const LabeledSpectrogram& b, Rng& rng);

}  // namespace cribtag
