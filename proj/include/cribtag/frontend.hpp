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

// Log-Mel frontend: 25 ms periodic Hamming frames every 10 ms, 512-point
// power spectra, 128 triangular mel filters, natural log with a floor, and
// dataset-level affine normalization.

#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "cribtag/audio.hpp"

namespace cribtag {

struct FrontendConfig {
  int sample_rate = 16000;
  std::size_t win_length = 400;
  std::size_t hop = 160;
  std::size_t fft_size = 512;
  std::size_t n_mels = 128;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-10;

  std::size_t n_bins() const { return fft_size / 2 + 1; }
  // Throws ConfigError when the invariants do not hold.
  void validate() const;
};

// Dense row-major float matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}
  float& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const float> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

// n_mels x T log-Mel energies, 100 frames per second.
struct LogMelSpectrogram {
  std::size_t n_mels = 0;
  std::size_t n_frames = 0;
  std::vector<float> values;

  LogMelSpectrogram() = default;
  LogMelSpectrogram(std::size_t mels, std::size_t frames, float fill = 0.0f)
      : n_mels(mels), n_frames(frames), values(mels * frames, fill) {}
  float& at(std::size_t mel, std::size_t frame) { return values[mel * n_frames + frame]; }
  float at(std::size_t mel, std::size_t frame) const { return values[mel * n_frames + frame]; }
  bool operator==(const LogMelSpectrogram&) const = default;
};

// Scalar mean and standard deviation of training-split spectrogram values.
struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// floor((len - win) / hop) + 1 for len >= win, else 0.
std::size_t frame_count(std::size_t n_samples, const FrontendConfig& cfg);

std::vector<float> hamming_window(std::size_t length);

// T x win_length matrix of windowed frames. Requires a 16 kHz waveform at
// least one window long.
Matrix frame_and_window(const Waveform& w, const FrontendConfig& cfg);

// In-place radix-2 complex FFT; size must be a power of two.
void fft(std::span<std::complex<double>> data);

// T x (fft_size/2 + 1) one-sided power spectrum of zero-padded frames.
Matrix power_spectrum(const Matrix& frames, const FrontendConfig& cfg);

// n_mels x (fft_size/2 + 1) triangular filters with mel-uniform centers
// between fmin and fmax. Each weight is the triangle averaged over the bin's
// frequency extent, so narrow low-frequency filters never vanish.
Matrix mel_filterbank(const FrontendConfig& cfg);

// Center frequency in Hz of each mel filter.
std::vector<double> mel_center_frequencies(const FrontendConfig& cfg);

LogMelSpectrogram log_mel(const Waveform& w, const FrontendConfig& cfg);

// Two-pass scalar statistics over every value of every spectrogram.
NormStats compute_stats(std::span<const LogMelSpectrogram> training_set);

// x -> (x - mean) / (2 std), giving a dataset mean of 0 and std of 0.5.
LogMelSpectrogram normalize(const LogMelSpectrogram& s, const NormStats& stats);
LogMelSpectrogram denormalize(const LogMelSpectrogram& s, const NormStats& stats);

// Comma-separated, one mel band per line.
void write_spectrogram_csv(std::ostream& out, const LogMelSpectrogram& s);
void write_spectrogram_csv(const std::filesystem::path& path, const LogMelSpectrogram& s);

}  // namespace cribtag
