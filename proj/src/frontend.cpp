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

#include "cribtag/frontend.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <string>

#include "cribtag/error.hpp"
#include "cribtag/ops.hpp"

namespace cribtag {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Integral of the unit-peak triangle (l, c, r) from -inf to x.
double triangle_cdf(double x, double l, double c, double r) {
  if (x <= l) return 0.0;
  if (x <= c) return (x - l) * (x - l) / (2.0 * (c - l));
  if (x <= r) return (c - l) / 2.0 + ((r - c) * (r - c) - (r - x) * (r - x)) / (2.0 * (r - c));
  return (r - l) / 2.0;
}

std::vector<double> mel_edges(const FrontendConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin), hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.n_mels + 1));
  }
  return edges;
}

}  // namespace

void FrontendConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("frontend: sample_rate must be positive");
  if (win_length == 0 || hop == 0) throw ConfigError("frontend: win_length and hop must be positive");
  if (!is_pow2(fft_size) || fft_size < win_length) {
    throw ConfigError("frontend: fft_size " + std::to_string(fft_size) +
                      " must be a power of two >= win_length " + std::to_string(win_length));
  }
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ConfigError("frontend: need 0 <= fmin < fmax <= sample_rate/2, got fmin=" +
                      std::to_string(fmin) + " fmax=" + std::to_string(fmax));
  }
  if (n_mels == 0) throw ConfigError("frontend: n_mels must be positive");
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(fft_size);
  std::size_t interior = 0;
  for (std::size_t k = 0; k < n_bins(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f > fmin && f < fmax) ++interior;
  }
  if (n_mels > interior) {
    throw ConfigError("frontend: n_mels " + std::to_string(n_mels) + " too large for fft_size " +
                      std::to_string(fft_size) + " (" + std::to_string(interior) +
                      " FFT bins inside the band)");
  }
  if (!(log_floor > 0.0)) throw ConfigError("frontend: log_floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t frame_count(std::size_t n_samples, const FrontendConfig& cfg) {
  if (n_samples < cfg.win_length) return 0;
  return (n_samples - cfg.win_length) / cfg.hop + 1;
}

std::vector<float> hamming_window(std::size_t length) {
  std::vector<float> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = static_cast<float>(0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                                     static_cast<double>(length)));
  }
  return w;
}

Matrix frame_and_window(const Waveform& w, const FrontendConfig& cfg) {
  if (w.sample_rate != cfg.sample_rate) {
    throw ContractError("frontend expects " + std::to_string(cfg.sample_rate) + " Hz audio, got " +
                        std::to_string(w.sample_rate) + " Hz");
  }
  const std::size_t t = frame_count(w.samples.size(), cfg);
  if (t == 0) {
    throw ContractError("input of " + std::to_string(w.samples.size()) +
                        " samples is shorter than one window (" + std::to_string(cfg.win_length) + ")");
  }
  const auto window = hamming_window(cfg.win_length);
  Matrix frames(t, cfg.win_length);
  for (std::size_t i = 0; i < t; ++i) {
    const float* src = w.samples.data() + i * cfg.hop;
    for (std::size_t n = 0; n < cfg.win_length; ++n) frames.at(i, n) = src[n] * window[n];
  }
  return frames;
}

void fft(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (!is_pow2(n)) throw ContractError("fft size " + std::to_string(n) + " is not a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> wk(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = data[i + k];
        const auto v = data[i + k + len / 2] * wk;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        wk *= wl;
      }
    }
  }
}

Matrix power_spectrum(const Matrix& frames, const FrontendConfig& cfg) {
  if (frames.cols > cfg.fft_size) {
    throw ContractError("frame width " + std::to_string(frames.cols) + " exceeds fft_size");
  }
  const std::size_t bins = cfg.n_bins();
  Matrix out(frames.rows, bins);
  std::vector<std::complex<double>> buf(cfg.fft_size);
  for (std::size_t r = 0; r < frames.rows; ++r) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t n = 0; n < frames.cols; ++n) buf[n] = frames.at(r, n);
    fft(buf);
    for (std::size_t k = 0; k < bins; ++k) out.at(r, k) = static_cast<float>(std::norm(buf[k]));
  }
  return out;
}

std::vector<double> mel_center_frequencies(const FrontendConfig& cfg) {
  const auto edges = mel_edges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

Matrix mel_filterbank(const FrontendConfig& cfg) {
  cfg.validate();
  const auto edges = mel_edges(cfg);
  const std::size_t bins = cfg.n_bins();
  const double bin_hz = static_cast<double>(cfg.sample_rate) / static_cast<double>(cfg.fft_size);
  Matrix fb(cfg.n_mels, bins);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double l = edges[m], c = edges[m + 1], r = edges[m + 2];
    double row_sum = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double a = (static_cast<double>(k) - 0.5) * bin_hz;
      const double b = (static_cast<double>(k) + 0.5) * bin_hz;
      const double wgt = (triangle_cdf(b, l, c, r) - triangle_cdf(a, l, c, r)) / bin_hz;
      fb.at(m, k) = static_cast<float>(wgt);
      row_sum += wgt;
    }
    if (!(row_sum > 0.0)) {
      throw ConfigError("mel filter " + std::to_string(m) + " is empty; n_mels too large for fft_size");
    }
  }
  return fb;
}

LogMelSpectrogram log_mel(const Waveform& w, const FrontendConfig& cfg) {
  const Matrix frames = frame_and_window(w, cfg);
  const Matrix power = power_spectrum(frames, cfg);
  const Matrix fb = mel_filterbank(cfg);
  LogMelSpectrogram out(cfg.n_mels, frames.rows);
  // fb [mels x bins] . power^T [bins x T]
  gemm<float>(false, true, cfg.n_mels, frames.rows, power.cols, 1.0f, fb.values.data(),
              power.values.data(), 0.0f, out.values.data());
  const auto floor = static_cast<float>(cfg.log_floor);
  for (auto& v : out.values) v = std::log(std::max(v, floor));
  return out;
}

NormStats compute_stats(std::span<const LogMelSpectrogram> training_set) {
  std::size_t n = 0;
  double total = 0.0;
  for (const auto& s : training_set) {
    for (float v : s.values) total += v;
    n += s.values.size();
  }
  if (n == 0) throw ContractError("compute_stats needs a nonempty training set");
  const double mu = total / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& s : training_set) {
    for (float v : s.values) ss += (v - mu) * (v - mu);
  }
  const double sigma = std::sqrt(ss / static_cast<double>(n));
  if (!(sigma > 0.0)) {
    throw NumericError("normalization stats: training spectrograms have zero variance");
  }
  return {mu, sigma};
}

LogMelSpectrogram normalize(const LogMelSpectrogram& s, const NormStats& stats) {
  if (!(stats.std > 0.0)) throw NumericError("normalize: std must be positive");
  LogMelSpectrogram out = s;
  const double k = 1.0 / (2.0 * stats.std);
  for (auto& v : out.values) v = static_cast<float>((v - stats.mean) * k);
  return out;
}

LogMelSpectrogram denormalize(const LogMelSpectrogram& s, const NormStats& stats) {
  if (!(stats.std > 0.0)) throw NumericError("denormalize: std must be positive");
  LogMelSpectrogram out = s;
  for (auto& v : out.values) v = static_cast<float>(v * 2.0 * stats.std + stats.mean);
  return out;
}

void write_spectrogram_csv(std::ostream& out, const LogMelSpectrogram& s) {
  char buf[32];
  for (std::size_t m = 0; m < s.n_mels; ++m) {
    for (std::size_t t = 0; t < s.n_frames; ++t) {
      if (t) out << ',';
      const auto res = std::to_chars(buf, buf + sizeof buf, s.at(m, t));
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void write_spectrogram_csv(const std::filesystem::path& path, const LogMelSpectrogram& s) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_spectrogram_csv(out, s);
}

}  // namespace cribtag
