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

#include "cribtag/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <optional>
#include <string>

#include "cribtag/error.hpp"

namespace cribtag {

namespace {

std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct ParsedWav {
  WavInfo info;
  std::size_t data_offset = 0;
};

// `logical_size` is the length of the full file; `b` may hold only a prefix
// when probing headers. Chunk headers must lie inside `b`.
ParsedWav parse(std::span<const std::uint8_t> b, std::size_t logical_size) {
  if (b.size() < 12) throw ParseError("truncated RIFF header (" + std::to_string(b.size()) + " bytes)");
  if (std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::optional<WavInfo> fmt;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id(reinterpret_cast<const char*>(b.data() + pos), 4);
    const std::size_t size = le32(b.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (size < 16 || body + size > b.size()) {
        throw ParseError("truncated fmt chunk (declared " + std::to_string(size) + " bytes)");
      }
      const std::uint16_t tag = le16(b.data() + body);
      const std::uint16_t channels = le16(b.data() + body + 2);
      const std::uint32_t rate = le32(b.data() + body + 4);
      const std::uint16_t bits = le16(b.data() + body + 14);
      const bool pcm16 = tag == 1 && bits == 16;
      const bool f32 = tag == 3 && bits == 32;
      if (!pcm16 && !f32) {
        throw FormatError("unsupported codec: fmt tag=" + std::to_string(tag) +
                          " bits=" + std::to_string(bits) + " channels=" + std::to_string(channels) +
                          " (need tag 1/16-bit or tag 3/32-bit)");
      }
      if (channels < 1 || channels > 2) {
        throw FormatError("unsupported channel count " + std::to_string(channels) +
                          " in fmt chunk (tag=" + std::to_string(tag) + ")");
      }
      if (rate == 0) throw FormatError("fmt chunk declares a zero sample rate");
      WavInfo info;
      info.encoding = pcm16 ? WavEncoding::kPcm16 : WavEncoding::kFloat32;
      info.channels = channels;
      info.sample_rate = static_cast<int>(rate);
      fmt = info;
    } else if (id == "data") {
      if (!fmt) throw ParseError("data chunk precedes fmt chunk");
      if (body + size > logical_size) {
        throw ParseError("truncated data chunk: declared " + std::to_string(size) + " bytes, " +
                         std::to_string(logical_size - body) + " present");
      }
      const std::size_t frame_bytes =
          static_cast<std::size_t>(fmt->channels) * (fmt->encoding == WavEncoding::kPcm16 ? 2 : 4);
      ParsedWav parsed;
      parsed.info = *fmt;
      parsed.info.frames = size / frame_bytes;
      parsed.data_offset = body;
      return parsed;
    }
    pos = body + size + (size & 1);
  }
  if (!fmt) throw ParseError("missing fmt chunk");
  throw ParseError("missing data chunk");
}

// Kaiser-windowed sinc sampled on a fine grid over [0, kHalfTaps] in units of
// the lower sample rate.
class SincTable {
 public:
  static constexpr int kHalfTaps = 32;
  static constexpr int kResolution = 512;
  static constexpr double kBeta = 8.0;

  SincTable() : values_(kHalfTaps * kResolution + 2) {
    const double i0_beta = bessel_i0(kBeta);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double z = static_cast<double>(i) / kResolution;
      if (z >= kHalfTaps) {
        values_[i] = 0.0;
        continue;
      }
      const double u = z / kHalfTaps;
      const double window = bessel_i0(kBeta * std::sqrt(1.0 - u * u)) / i0_beta;
      const double sinc = z == 0.0 ? 1.0 : std::sin(std::numbers::pi * z) / (std::numbers::pi * z);
      values_[i] = sinc * window;
    }
  }

  double operator()(double z) const {
    z = std::abs(z);
    if (z >= kHalfTaps) return 0.0;
    const double pos = z * kResolution;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

 private:
  static double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double q = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return sum;
  }

  std::vector<double> values_;
};

const SincTable& sinc_table() {
  static const SincTable table;
  return table;
}

}  // namespace

WavInfo parse_wav_header(std::span<const std::uint8_t> bytes) { return parse(bytes, bytes.size()).info; }

Waveform decode_wav(std::span<const std::uint8_t> bytes) {
  const ParsedWav p = parse(bytes, bytes.size());
  Waveform w;
  w.sample_rate = p.info.sample_rate;
  w.samples.resize(p.info.frames);
  const std::uint8_t* src = bytes.data() + p.data_offset;
  const int ch = p.info.channels;
  for (std::size_t f = 0; f < p.info.frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < ch; ++c) {
      const std::size_t idx = f * static_cast<std::size_t>(ch) + static_cast<std::size_t>(c);
      if (p.info.encoding == WavEncoding::kPcm16) {
        acc += static_cast<std::int16_t>(le16(src + idx * 2)) / 32768.0;
      } else {
        const std::uint32_t bits = le32(src + idx * 4);
        float v;
        std::memcpy(&v, &bits, sizeof v);
        acc += std::isfinite(v) ? std::clamp(v, -1.0f, 1.0f) : 0.0f;
      }
    }
    w.samples[f] = static_cast<float>(acc / ch);
  }
  return w;
}

Waveform read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_wav(bytes);
  } catch (const DataError& e) {
    // Re-throw with the path attached, preserving the error category.
    const std::string msg = path.string() + ": " + e.what();
    if (dynamic_cast<const FormatError*>(&e)) throw FormatError(msg);
    if (dynamic_cast<const ParseError*>(&e)) throw ParseError(msg);
    throw DataError(msg);
  }
}

WavInfo probe_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  // Collect the file prefix up to and including the data chunk header; the
  // payload itself is never read.
  std::vector<std::uint8_t> head(std::min<std::size_t>(file_size, 12));
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  std::size_t pos = 12;
  while (pos + 8 <= file_size) {
    std::uint8_t hdr[8];
    in.seekg(static_cast<std::streamoff>(pos));
    in.read(reinterpret_cast<char*>(hdr), 8);
    if (!in) break;
    const std::size_t size = le32(hdr + 4);
    const std::size_t next = pos + 8 + size + (size & 1);
    if (std::memcmp(hdr, "data", 4) == 0) {
      head.resize(pos);
      head.insert(head.end(), hdr, hdr + 8);
      break;
    }
    const std::size_t chunk_end = std::min(next, file_size);
    head.resize(chunk_end);
    in.seekg(static_cast<std::streamoff>(pos));
    in.read(reinterpret_cast<char*>(head.data() + pos), static_cast<std::streamsize>(chunk_end - pos));
    pos = next;
  }
  try {
    return parse(head, file_size).info;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const Waveform& w) {
  if (w.sample_rate <= 0) throw ContractError("write_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 4);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, 3);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(w.sample_rate));
  put32(out, static_cast<std::uint32_t>(w.sample_rate) * 4);
  put16(out, 4);
  put16(out, 32);
  put_tag(out, "data");
  put32(out, data_bytes);
  for (float v : w.samples) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put32(out, bits);
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
  const auto bytes = encode_wav(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void write_wav_pcm16(const std::filesystem::path& path, std::span<const std::int16_t> interleaved,
                     int channels, int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  std::vector<std::uint8_t> out;
  put_tag(out, "RIFF");
  put32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, 1);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate * channels * 2));
  put16(out, static_cast<std::uint16_t>(channels * 2));
  put16(out, 16);
  put_tag(out, "data");
  put32(out, data_bytes);
  for (auto v : interleaved) put16(out, static_cast<std::uint16_t>(v));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw ContractError("resample: target rate must be positive");
  if (w.sample_rate == target_rate) return w;
  const auto src_rate = static_cast<std::int64_t>(w.sample_rate);
  const auto dst_rate = static_cast<std::int64_t>(target_rate);
  const auto len = static_cast<std::int64_t>(w.samples.size());
  const std::int64_t out_len = (2 * len * dst_rate + src_rate) / (2 * src_rate);

  const double ratio = static_cast<double>(dst_rate) / static_cast<double>(src_rate);
  // Cutoff relative to the input Nyquist, with a small guard band.
  const double fc = 0.95 * std::min(1.0, ratio);
  const double reach = SincTable::kHalfTaps / fc;
  const auto& table = sinc_table();

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));
  for (std::int64_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;
    const auto lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(t - reach)));
    const auto hi = std::min<std::int64_t>(len - 1, static_cast<std::int64_t>(std::floor(t + reach)));
    double acc = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k) {
      acc += w.samples[static_cast<std::size_t>(k)] * fc * table(fc * (t - static_cast<double>(k)));
    }
    out.samples[static_cast<std::size_t>(n)] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return out;
}

}  // namespace cribtag
