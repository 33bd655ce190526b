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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace cribtag {

inline constexpr int kPipelineSampleRate = 16000;

// Mono audio in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kPipelineSampleRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

enum class WavEncoding : std::uint16_t {
  kPcm16 = 1,
  kFloat32 = 3,
};

// Header facts, available without decoding the payload.
struct WavInfo {
  WavEncoding encoding = WavEncoding::kPcm16;
  int channels = 1;
  int sample_rate = 0;
  std::size_t frames = 0;

  double duration_s() const {
    return static_cast<double>(frames) / static_cast<double>(sample_rate);
  }
};

// RIFF/WAVE, little-endian, PCM-16 or float-32, one or two channels. Stereo is
// averaged to mono; PCM-16 is scaled by 1/32768.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(std::span<const std::uint8_t> bytes);
WavInfo probe_wav(const std::filesystem::path& path);
WavInfo parse_wav_header(std::span<const std::uint8_t> bytes);

// Writes float-32 mono.
void write_wav(const std::filesystem::path& path, const Waveform& w);
std::vector<std::uint8_t> encode_wav(const Waveform& w);

// Writes PCM-16 with the given channel count (interleaved input). Mainly for
// fixtures and interop tests.
void write_wav_pcm16(const std::filesystem::path& path, std::span<const std::int16_t> interleaved,
                     int channels, int sample_rate);

// Band-limited resampling with a Kaiser-windowed sinc kernel (64 taps at the
// lower of the two rates, beta = 8). Output length is
// round(len * target / source); identity when the rates match.
Waveform resample(const Waveform& w, int target_rate);

}  // namespace cribtag
