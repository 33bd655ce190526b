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

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "cribtag/error.hpp"
#include "cribtag/frontend.hpp"
#include "fixtures.hpp"

using namespace cribtag;
using cribtag::testing::sine;

namespace {

// Counts frame starts 0, hop, 2 hop, ... whose window fits.
std::size_t brute_frames(std::size_t n, std::size_t win, std::size_t hop) {
  std::size_t c = 0;
  for (std::size_t s = 0; s + win <= n; s += hop) ++c;
  return c;
}

LogMelSpectrogram noisy_spec(std::uint64_t seed, const FrontendConfig& fe) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.2);
  auto x = sine(300.0 + 50.0 * double(seed), 1.0, 0.3);
  for (auto& v : x) v += static_cast<float>(g(rng));
  return log_mel(Waveform{x, 16000}, fe);
}

}  // namespace

TEST_CASE("four seconds give 128 x 398") {
  const auto s = log_mel(Waveform{std::vector<float>(64000, 0.0f), 16000}, FrontendConfig{});
  CHECK(s.n_mels == 128);
  CHECK(s.n_frames == 398);
}

TEST_CASE("frame count matches enumeration over random lengths") {
  FrontendConfig fe;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> len(0, 200000);
  for (int i = 0; i < 2000; ++i) {
    const auto n = len(rng);
    CHECK(frame_count(n, fe) == brute_frames(n, fe.win_length, fe.hop));
  }
  for (std::size_t n : {0u, 399u, 400u, 559u, 560u}) CHECK(frame_count(n, fe) == brute_frames(n, 400, 160));
}

TEST_CASE("periodic hamming window") {
  const auto w = hamming_window(400);
  for (std::size_t i = 0; i < 400; ++i) {
    CHECK(w[i] == doctest::Approx(0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * double(i) / 400.0)).epsilon(1e-6));
  }
}

TEST_CASE("fft agrees with a direct DFT") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::complex<double>> x(64);
  for (auto& v : x) v = {u(rng), u(rng)};
  auto y = x;
  fft(y);
  for (std::size_t k = 0; k < 64; ++k) {
    std::complex<double> acc = 0;
    for (std::size_t n = 0; n < 64; ++n) acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / 64.0);
    CHECK(std::abs(acc - y[k]) < 1e-9);
  }
  std::vector<std::complex<double>> bad(48);
  CHECK_THROWS_AS(fft(bad), ContractError);
}

TEST_CASE("filterbank is nonnegative and covers the band between the outer centers") {
  FrontendConfig fe;
  const auto fb = mel_filterbank(fe);
  CHECK(fb.rows == 128);
  CHECK(fb.cols == 257);
  for (float v : fb.values) CHECK(v >= 0.0f);
  for (std::size_t m = 0; m < fb.rows; ++m) {
    double total = 0;
    for (std::size_t k = 0; k < fb.cols; ++k) total += fb.at(m, k);
    CHECK(total > 0.0);
  }
  const auto centers = mel_center_frequencies(fe);
  REQUIRE(centers.size() == 128);
  for (std::size_t m = 1; m < centers.size(); ++m) CHECK(centers[m] > centers[m - 1]);
  const double bin_hz = 16000.0 / 512.0;
  for (std::size_t k = 0; k < fb.cols; ++k) {
    const double f = double(k) * bin_hz;
    if (f < centers.front() || f > centers.back()) continue;
    double cover = 0;
    for (std::size_t m = 0; m < fb.rows; ++m) cover += fb.at(m, k);
    CHECK(cover > 0.0);
  }
  FrontendConfig too_many = fe;
  too_many.n_mels = 400;
  CHECK_THROWS_AS(too_many.validate(), ConfigError);
}

TEST_CASE("a pure tone peaks in the band whose center is nearest") {
  FrontendConfig fe;
  const auto centers = mel_center_frequencies(fe);
  for (double hz : {250.0, 1000.0, 3000.0, 6000.0}) {
    const auto s = log_mel(Waveform{sine(hz, 1.0, 0.5), 16000}, fe);
    const std::size_t t = s.n_frames / 2;
    std::size_t best = 0;
    for (std::size_t m = 1; m < s.n_mels; ++m)
      if (s.at(m, t) > s.at(best, t)) best = m;
    std::size_t nearest = 0;
    for (std::size_t m = 1; m < centers.size(); ++m)
      if (std::abs(centers[m] - hz) < std::abs(centers[nearest] - hz)) nearest = m;
    CHECK(static_cast<int>(best) - static_cast<int>(nearest) <= 1);
    CHECK(static_cast<int>(nearest) - static_cast<int>(best) <= 1);
  }
}

TEST_CASE("silence sits at the log floor") {
  FrontendConfig fe;
  const auto s = log_mel(Waveform{std::vector<float>(16000, 0.0f), 16000}, fe);
  for (float v : s.values) CHECK(v == doctest::Approx(std::log(fe.log_floor)));
}

TEST_CASE("normalization targets mean 0 and std 0.5 on the training set") {
  FrontendConfig fe;
  std::vector<LogMelSpectrogram> train;
  for (std::uint64_t s = 0; s < 6; ++s) train.push_back(noisy_spec(s, fe));
  const auto stats = compute_stats(train);
  double sum = 0, sq = 0, n = 0;
  for (const auto& s : train) {
    for (float v : normalize(s, stats).values) {
      sum += v;
      sq += double(v) * v;
      n += 1;
    }
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) <= 1e-3);
  CHECK(std::abs(sd - 0.5) <= 1e-3);

  const auto back = denormalize(normalize(train[0], stats), stats);
  for (std::size_t i = 0; i < back.values.size(); i += 101) CHECK(back.values[i] == doctest::Approx(train[0].values[i]).epsilon(1e-5));

  std::vector<LogMelSpectrogram> flat{LogMelSpectrogram(4, 4, 1.0f)};
  CHECK_THROWS_AS(compute_stats(flat), NumericError);
  CHECK_THROWS_AS(compute_stats(std::span<const LogMelSpectrogram>{}), ContractError);
}

TEST_CASE("input contracts") {
  FrontendConfig fe;
  CHECK_THROWS_AS(log_mel(Waveform{std::vector<float>(64000), 8000}, fe), ContractError);
  CHECK_THROWS_AS(log_mel(Waveform{std::vector<float>(100), 16000}, fe), ContractError);
  FrontendConfig bad = fe;
  bad.fmax = 9000;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("csv has one line per mel band") {
  LogMelSpectrogram s(3, 2);
  s.at(2, 1) = 1.5f;
  std::ostringstream out;
  write_spectrogram_csv(out, s);
  const auto text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find("1.5") != std::string::npos);
}

TEST_CASE("delaying the input by whole hops shifts the columns") {
  const FrontendConfig fe;
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 0.1);
  std::vector<float> x(16000);
  for (auto& v : x) v = static_cast<float>(g(rng));
  for (std::size_t k : {1, 3, 7}) {
    std::vector<float> delayed(k * fe.hop, 0.0f);
    delayed.insert(delayed.end(), x.begin(), x.end());
    const auto a = log_mel(Waveform{x, 16000}, fe);
    const auto b = log_mel(Waveform{delayed, 16000}, fe);
    REQUIRE(b.n_frames == a.n_frames + k);
    double worst = 0;
    for (std::size_t m = 0; m < a.n_mels; ++m)
      for (std::size_t t = 0; t < a.n_frames; ++t) worst = std::max(worst, double(std::abs(a.at(m, t) - b.at(m, t + k))));
    CHECK(worst <= 1e-5);
  }
}
