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

#include "cribtag/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "cribtag/error.hpp"

namespace cribtag {

namespace {

constexpr char kMagic[4] = {'A', 'S', 'T', 'C'};
constexpr std::string_view kMetaConfig = "meta/config";
constexpr std::string_view kMetaTrain = "meta/train";
constexpr std::string_view kMetaNorm = "meta/norm";

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::size_t& offset) : bytes_(bytes), pos_(offset) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ > bytes_.size() || bytes_.size() - pos_ < n) {
      throw ParseError(std::string("truncated tensor data while reading ") + what + " at byte " +
                       std::to_string(pos_));
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t& pos_;
};

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

NamedTensor meta_tensor(std::string_view name, std::vector<float> values) {
  NamedTensor t;
  t.name = std::string(name);
  t.shape = {values.size()};
  t.data = std::move(values);
  return t;
}

std::size_t as_size(float v, const char* what) {
  if (!(v >= 0.0f) || v != std::floor(v) || v > 1e9f) {
    throw ValidationError(std::string("checkpoint config field ") + what + " is not a count");
  }
  return static_cast<std::size_t>(v);
}

std::vector<float> encode_config(const ModelConfig& c) {
  std::vector<float> v = {
      static_cast<float>(c.embed_dim), static_cast<float>(c.n_layers),  static_cast<float>(c.n_heads),
      static_cast<float>(c.mlp_ratio), static_cast<float>(c.patch),     static_cast<float>(c.overlap),
      static_cast<float>(c.n_mels),    static_cast<float>(c.n_frames),  static_cast<float>(c.n_classes),
      c.pooling == Pooling::kCls ? 1.0f : 0.0f, static_cast<float>(c.head_dims.size())};
  for (auto h : c.head_dims) v.push_back(static_cast<float>(h));
  return v;
}

ModelConfig decode_config(const std::vector<float>& v) {
  if (v.size() < 11) throw ValidationError("checkpoint config record is too short");
  ModelConfig c;
  c.embed_dim = as_size(v[0], "embed_dim");
  c.n_layers = as_size(v[1], "n_layers");
  c.n_heads = as_size(v[2], "n_heads");
  c.mlp_ratio = as_size(v[3], "mlp_ratio");
  c.patch = as_size(v[4], "patch");
  c.overlap = as_size(v[5], "overlap");
  c.n_mels = as_size(v[6], "n_mels");
  c.n_frames = as_size(v[7], "n_frames");
  c.n_classes = as_size(v[8], "n_classes");
  c.pooling = v[9] == 1.0f ? Pooling::kCls : Pooling::kMean;
  const std::size_t nh = as_size(v[10], "head count");
  if (v.size() != 11 + nh) throw ValidationError("checkpoint config record has the wrong length");
  c.head_dims.clear();
  for (std::size_t i = 0; i < nh; ++i) c.head_dims.push_back(as_size(v[11 + i], "head dim"));
  c.validate();
  return c;
}

}  // namespace

void append_tensor_entry(std::vector<std::uint8_t>& out, const NamedTensor& t) {
  if (t.name.empty() || t.name.size() > 0xffff) throw ContractError("tensor name length out of range");
  if (t.shape.size() > 0xff) throw ContractError("tensor rank out of range");
  if (numel(t.shape) != t.data.size()) {
    throw ShapeError("tensor '" + t.name + "' has " + std::to_string(t.data.size()) + " values for shape " +
                     shape_string(t.shape));
  }
  put_u16(out, static_cast<std::uint16_t>(t.name.size()));
  out.insert(out.end(), t.name.begin(), t.name.end());
  put_u8(out, 0);
  put_u8(out, static_cast<std::uint8_t>(t.shape.size()));
  for (auto d : t.shape) {
    if (d > 0xffffffffULL) throw ContractError("tensor dimension out of range");
    put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

NamedTensor read_tensor_entry(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  Reader r(bytes, offset);
  NamedTensor t;
  const std::uint16_t name_len = r.u16("name length");
  if (name_len == 0) throw ParseError("tensor with an empty name");
  const auto name = r.take(name_len, "name");
  t.name.assign(name.begin(), name.end());
  const std::uint8_t dtype = r.u8("dtype");
  if (dtype != 0) {
    throw FormatError("tensor '" + t.name + "' has dtype " + std::to_string(dtype) + "; only 0 (f32) is supported");
  }
  const std::uint8_t ndim = r.u8("ndim");
  std::size_t count = 1;
  for (std::uint8_t i = 0; i < ndim; ++i) {
    const std::size_t d = r.u32("dims");
    t.shape.push_back(d);
    count *= d;
    if (count > bytes.size()) throw ParseError("tensor '" + t.name + "' is larger than the file");
  }
  const auto raw = r.take(count * 4, "tensor data");
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(raw[4 * i + b]) << (8 * b);
    t.data[i] = std::bit_cast<float>(v);
  }
  return t;
}

std::vector<std::uint8_t> encode_archive(std::span<const NamedTensor> tensors) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) append_tensor_entry(out, t);
  put_u32(out, crc_of(out));
  return out;
}

std::vector<NamedTensor> decode_archive(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw FormatError("not a tensor archive (bad magic)");
  }
  if (bytes.size() < 16) throw ParseError("tensor archive truncated (" + std::to_string(bytes.size()) + " bytes)");
  const auto body = bytes.first(bytes.size() - 4);
  std::size_t foot = bytes.size() - 4;
  const std::uint32_t stored = Reader(bytes, foot).u32("crc");
  const std::uint32_t actual = crc_of(body);
  std::size_t off = 4;
  Reader r(body, off);
  const std::uint32_t version = r.u32("version");
  if (stored != actual) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "stored %08x, computed %08x", stored, actual);
    throw ParseError(std::string("tensor archive checksum mismatch (") + buf + "); file is corrupt or truncated");
  }
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported archive version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t count = r.u32("tensor count");
  std::vector<NamedTensor> tensors;
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto t = read_tensor_entry(body, off);
    if (!seen.insert(t.name).second) throw ParseError("duplicate tensor '" + t.name + "'");
    tensors.push_back(std::move(t));
  }
  if (off != body.size()) {
    throw ParseError(std::to_string(body.size() - off) + " trailing bytes after the last tensor");
  }
  return tensors;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

Checkpoint make_checkpoint(const Model<float>& model, const TrainingMeta& meta, std::optional<NormStats> norm) {
  Checkpoint c;
  c.config = model.config();
  c.meta = meta;
  c.norm = norm;
  for (const auto& p : model.parameters()) {
    c.tensors.push_back({p.name, p.value.shape(), {p.value.data().begin(), p.value.data().end()}});
  }
  return c;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<NamedTensor> all;
  all.push_back(meta_tensor(kMetaConfig, encode_config(ckpt.config)));
  all.push_back(meta_tensor(kMetaTrain, {static_cast<float>(ckpt.meta.epoch), static_cast<float>(ckpt.meta.best_metric)}));
  if (ckpt.norm) {
    all.push_back(meta_tensor(kMetaNorm, {static_cast<float>(ckpt.norm->mean), static_cast<float>(ckpt.norm->std)}));
  }
  for (const auto& t : ckpt.tensors) {
    if (t.name.starts_with("meta/")) throw ContractError("tensor name '" + t.name + "' uses the reserved meta/ prefix");
    all.push_back(t);
  }
  return encode_archive(all);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  auto tensors = decode_archive(bytes);
  Checkpoint c;
  bool have_config = false;
  for (auto& t : tensors) {
    if (t.name == kMetaConfig) {
      c.config = decode_config(t.data);
      have_config = true;
    } else if (t.name == kMetaTrain) {
      if (t.data.size() != 2) throw ValidationError("meta/train must hold 2 values");
      c.meta.epoch = static_cast<int>(t.data[0]);
      c.meta.best_metric = t.data[1];
    } else if (t.name == kMetaNorm) {
      if (t.data.size() != 2) throw ValidationError("meta/norm must hold 2 values");
      c.norm = NormStats{t.data[0], t.data[1]};
    } else if (t.name.starts_with("meta/")) {
      throw ValidationError("unknown metadata tensor '" + t.name + "'");
    } else {
      c.tensors.push_back(std::move(t));
    }
  }
  if (!have_config) throw ValidationError("checkpoint has no meta/config record");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const TrainingMeta& meta,
                     std::optional<NormStats> norm) {
  save_checkpoint(path, make_checkpoint(model, meta, norm));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> load_into(Model<float>& model, std::span<const NamedTensor> tensors, LoadMode mode) {
  std::vector<std::string> unknown;
  for (const auto& t : tensors) {
    if (!model.has(t.name)) unknown.push_back(t.name);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& n : unknown) list += (list.empty() ? "" : ", ") + n;
    throw ShapeError("unknown tensor(s) not in the model: " + list);
  }
  std::set<std::string> seen;
  for (const auto& t : tensors) {
    if (!seen.insert(t.name).second) throw ShapeError("tensor '" + t.name + "' given twice");
    const Shape want = model.expected_shape(t.name);
    if (t.shape != want) {
      throw ShapeError("tensor '" + t.name + "' has shape " + shape_string(t.shape) + ", model expects " +
                       shape_string(want));
    }
  }
  if (mode == LoadMode::kStrict) {
    std::string missing;
    for (const auto& p : model.parameters()) {
      if (!seen.count(p.name)) missing += (missing.empty() ? "" : ", ") + p.name;
    }
    if (!missing.empty()) throw ShapeError("missing tensor(s): " + missing);
  }
  std::vector<std::string> loaded;
  for (const auto& t : tensors) {
    auto dst = model.param(t.name).data();
    std::copy(t.data.begin(), t.data.end(), dst.begin());
    loaded.push_back(t.name);
  }
  return loaded;
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
  Model<float> model(ckpt.config);
  load_into(model, ckpt.tensors, LoadMode::kStrict);
  return model;
}

Model<float> load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected, LoadMode mode) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (!(ckpt.config == expected)) {
    throw ShapeError(path.string() + ": checkpoint config (embed " + std::to_string(ckpt.config.embed_dim) +
                     ", layers " + std::to_string(ckpt.config.n_layers) + ") differs from the requested config (embed " +
                     std::to_string(expected.embed_dim) + ", layers " + std::to_string(expected.n_layers) + ")");
  }
  Model<float> model(expected);
  load_into(model, ckpt.tensors, mode);
  return model;
}

}  // namespace cribtag
