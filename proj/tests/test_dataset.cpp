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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "cribtag/dataset.hpp"
#include "cribtag/error.hpp"
#include "cribtag/log.hpp"
#include "fixtures.hpp"

using namespace cribtag;
using cribtag::testing::make_segment;
using cribtag::testing::TempDir;

namespace {

std::vector<ManifestRecord> parse(const std::string& text, bool check_audio = false) {
  std::istringstream in(text);
  return parse_manifest(in, {"", check_audio});
}

std::vector<Segment> fake_segments(const std::map<Label, std::size_t>& counts, const std::string& tag,
                                   Source source = Source::kLbHome) {
  std::vector<Segment> out;
  for (const auto& [label, n] : counts) {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(make_segment(std::vector<float>(8, 0.0f), LabelSet{label},
                                 tag + "/" + std::string(label_name(label)) + "/" + std::to_string(i), source, tag));
    }
  }
  return out;
}

std::vector<ManifestRecord> family_records(std::size_t families, std::size_t per_family) {
  std::vector<ManifestRecord> out;
  for (std::size_t f = 0; f < families; ++f) {
    for (std::size_t i = 0; i < per_family + f; ++i) {
      ManifestRecord r;
      r.audio_path = "fam" + std::to_string(f) + ".wav";
      r.onset_s = 10.0 * double(i);
      r.offset_s = r.onset_s + 5.0;
      r.labels = {Label::kTv};
      r.family_id = "fam" + std::to_string(f);
      out.push_back(r);
    }
  }
  return out;
}

// Captures warnings for the lifetime of the object.
struct WarningCapture {
  std::vector<std::string> messages;
  WarningSink previous;
  WarningCapture() {
    previous = set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_sink(previous); }
};

}  // namespace

TEST_CASE("labels and aliases") {
  CHECK(all_labels().size() == 7);
  CHECK(parse_label("child_voice") == Label::kChildVoice);
  CHECK(parse_label("ChildVoice") == Label::kChildVoice);
  CHECK(parse_label("female") == Label::kAdultSpeech);
  CHECK(parse_label("male") == Label::kAdultSpeech);
  CHECK(parse_label("TV") == Label::kTv);
  CHECK_FALSE(parse_label("dog").has_value());
  for (auto l : all_labels()) CHECK(parse_label(label_name(l)) == l);

  LabelSet s{Label::kMusic, Label::kTv};
  CHECK(s.size() == 2);
  CHECK(s.primary() == Label::kTv);
  CHECK_THROWS_AS(LabelSet{}.primary(), ContractError);
}

TEST_CASE("manifest parsing and round trip") {
  const std::string text =
      R"({"path":"a.wav","onset_s":0.5,"offset_s":3.0,"labels":["tv","music"],"family_id":"f1","source":"lb_home"})"
      "\n\n"
      R"({"path":"b.wav","onset_s":1,"offset_s":9,"labels":["child_voice"],"family_id":"f2","source":"chime_home"})"
      "\n";
  const auto recs = parse(text);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].labels == LabelSet{Label::kTv, Label::kMusic});
  CHECK(recs[1].source == Source::kChimeHome);
  CHECK(recs[0].key() == recs[0].key());

  std::ostringstream out;
  write_manifest(out, recs);
  const auto again = parse(out.str());
  REQUIRE(again.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(again[i].audio_path == recs[i].audio_path);
    CHECK(again[i].onset_s == recs[i].onset_s);
    CHECK(again[i].offset_s == recs[i].offset_s);
    CHECK(again[i].labels == recs[i].labels);
    CHECK(again[i].family_id == recs[i].family_id);
    CHECK(again[i].source == recs[i].source);
  }
}

TEST_CASE("manifest errors name the line") {
  const std::string good = R"({"path":"a.wav","onset_s":0,"offset_s":3,"labels":["tv"],"family_id":"f","source":"lb_home"})";
  auto expect = [&](const std::string& bad_line, auto tag) {
    using E = decltype(tag);
    try {
      parse(good + "\n" + bad_line + "\n");
      FAIL("expected an exception");
    } catch (const E& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  };
  expect("{not json", ParseError{""});
  expect(R"({"path":"a.wav","onset_s":0,"labels":["tv"],"family_id":"f","source":"lb_home"})", ParseError{""});
  expect(R"({"path":"a.wav","onset_s":0,"offset_s":3,"labels":["dog"],"family_id":"f","source":"lb_home"})",
         ValidationError{""});
  expect(R"({"path":"a.wav","onset_s":4,"offset_s":3,"labels":["tv"],"family_id":"f","source":"lb_home"})",
         ValidationError{""});
  expect(R"({"path":"a.wav","onset_s":0,"offset_s":3,"labels":[],"family_id":"f","source":"lb_home"})",
         ValidationError{""});
}

TEST_CASE("manifest paths resolve against the manifest directory and are checked") {
  TempDir dir("manifest");
  std::filesystem::create_directories(dir / "audio");
  cribtag::testing::write_wav_file(dir / "audio/x.wav", std::vector<float>(16000 * 5, 0.0f));
  cribtag::testing::write_text_file(
      dir / "m.jsonl",
      R"({"path":"audio/x.wav","onset_s":0,"offset_s":5,"labels":["tv"],"family_id":"f","source":"lb_home"})"
      "\n");
  const auto recs = load_manifest(dir / "m.jsonl");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].audio_path == dir / "audio/x.wav");

  cribtag::testing::write_text_file(
      dir / "late.jsonl",
      R"({"path":"audio/x.wav","onset_s":0,"offset_s":6,"labels":["tv"],"family_id":"f","source":"lb_home"})"
      "\n");
  CHECK_THROWS_AS(load_manifest(dir / "late.jsonl"), ValidationError);
  CHECK_NOTHROW(load_manifest(dir / "late.jsonl", false));
  CHECK_THROWS_AS(load_manifest(dir / "missing.jsonl"), DataError);
}

TEST_CASE("window planning") {
  SUBCASE("long interval tiles, keeps a remainder of at least 1 s") {
    const auto p = plan_windows(0.0, 10.0, 20.0);
    REQUIRE(p.size() == 3);
    CHECK(p[0].start_s == 0.0);
    CHECK(p[1].start_s == 4.0);
    CHECK(p[2].start_s == doctest::Approx(7.0));  // centered on [8, 10]
  }
  SUBCASE("short remainder is dropped") { CHECK(plan_windows(0.0, 8.5, 20.0).size() == 2); }
  SUBCASE("short interval is padded evenly") {
    const auto p = plan_windows(5.0, 6.0, 20.0);
    REQUIRE(p.size() == 1);
    CHECK(p[0].start_s == doctest::Approx(3.5));
  }
  SUBCASE("padding deficit moves to the other side") {
    CHECK(plan_windows(0.5, 1.5, 10.0).at(0).start_s == 0.0);
    CHECK(plan_windows(9.5, 10.0, 10.0).at(0).start_s == doctest::Approx(6.0));
  }
  SUBCASE("file shorter than 4 s") { CHECK(plan_windows(0.0, 3.0, 3.5).empty()); }
}

TEST_CASE("window plan properties over random intervals") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 3000; ++i) {
    const double duration = 4.0 + 30.0 * u(rng);
    const double on = (duration - 0.1) * u(rng);
    const double off = on + std::max(0.05, (duration - on) * u(rng));
    const auto plan = plan_windows(on, off, duration);
    REQUIRE_FALSE(plan.empty());
    for (const auto& w : plan) {
      CHECK(w.end_s - w.start_s == doctest::Approx(4.0));
      CHECK(w.start_s >= -1e-9);
      CHECK(w.end_s <= duration + 1e-9);
    }
    if (off - on < 4.0) {
      // A short interval is covered as far as 4 s allows.
      CHECK(plan[0].start_s <= on + 1e-9);
      CHECK(plan[0].end_s >= off - 1e-9);
    }
  }
}

TEST_CASE("segment extraction copies the planned audio") {
  Waveform audio{std::vector<float>(16000 * 12), 16000};
  for (std::size_t i = 0; i < audio.samples.size(); ++i) audio.samples[i] = float(i);
  ManifestRecord r;
  r.audio_path = "x.wav";
  r.onset_s = 2.0;
  r.offset_s = 10.0;
  r.labels = {Label::kMusic};
  r.family_id = "f";
  const auto segs = extract_segments(r, audio);
  REQUIRE(segs.size() == 2);
  CHECK(segs[1].audio().size() == kSegmentSamples);
  CHECK(segs[1].audio()[0] == float(6 * 16000));
  CHECK(segs[1].provenance.record_key == r.key());
  CHECK(segs[1].provenance.window_index == 1);
  CHECK(segs[0].provenance.id() != segs[1].provenance.id());

  WarningCapture warnings;
  CHECK(extract_segments(r, Waveform{std::vector<float>(16000 * 3), 16000}).empty());
  CHECK(warnings.messages.size() == 1);
  CHECK_THROWS_AS(extract_segments(r, Waveform{std::vector<float>(8000 * 12), 8000}), ContractError);
}

TEST_CASE("split is an exact family-stratified partition") {
  const auto recs = family_records(5, 3);
  for (std::uint64_t seed : {0ull, 1ull, 42ull}) {
    const auto s = split(recs, {0.8, seed});
    CHECK(s.train.size() + s.test.size() == recs.size());
    std::multiset<std::string> all, parts;
    for (const auto& r : recs) all.insert(r.key());
    for (const auto& r : s.train) parts.insert(r.key());
    for (const auto& r : s.test) parts.insert(r.key());
    CHECK(all == parts);
    std::set<std::string> train_fam, test_fam;
    for (const auto& r : s.train) train_fam.insert(r.family_id);
    for (const auto& r : s.test) test_fam.insert(r.family_id);
    CHECK(train_fam.size() == 5);
    CHECK(test_fam.size() == 5);

    const auto again = split(recs, {0.8, seed});
    REQUIRE(again.test.size() == s.test.size());
    for (std::size_t i = 0; i < s.test.size(); ++i) CHECK(again.test[i].key() == s.test[i].key());
  }
  // A single-record family trains.
  const auto lone = split(family_records(1, 1), {0.8, 3});
  CHECK(lone.train.size() == 1);
  CHECK(lone.test.empty());
  CHECK_THROWS_AS(split(recs, {1.0, 0}), ConfigError);
}

TEST_CASE("balancing {800, 290} with cap 4 gives {800, 800}") {
  const auto segs = fake_segments({{Label::kTv, 800}, {Label::kMusic, 290}}, "lb");
  const auto out = balance_by_resampling(segs, 4.0, 7, LabelSet{});
  const auto c = count_by_class(out);
  CHECK(c[static_cast<std::size_t>(Label::kTv)] == 800);
  CHECK(c[static_cast<std::size_t>(Label::kMusic)] == 800);
  // Originals first, in order.
  for (std::size_t i = 0; i < segs.size(); ++i) CHECK(out[i].provenance.record_key == segs[i].provenance.record_key);

  const auto capped = count_by_class(balance_by_resampling(segs, 2.0, 7, LabelSet{}));
  CHECK(capped[static_cast<std::size_t>(Label::kMusic)] == 580);

  const auto again = balance_by_resampling(segs, 4.0, 7, LabelSet{});
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].provenance.record_key == out[i].provenance.record_key);

  CHECK_THROWS_AS(balance_by_resampling(segs, 0.5, 7, LabelSet{}), ContractError);
  CHECK_THROWS_AS(balance_by_resampling(segs, 4.0, 7), ValidationError);
}

TEST_CASE("scheme composition") {
  const auto lb = fake_segments({{Label::kChildVoice, 10}, {Label::kAdultSpeech, 3}}, "lb");
  const auto pub = fake_segments({{Label::kAdultSpeech, 5}, {Label::kTv, 5}, {Label::kChildVoice, 20}}, "pub",
                                 Source::kChimeHome);

  CHECK(compose_scheme(Scheme::kPublic, pub, {}, 4.0, 1).size() == pub.size());

  const auto resampled = count_by_class(compose_scheme(Scheme::kResampled, {}, lb, 4.0, 1));
  CHECK(resampled[0] == 10);
  CHECK(resampled[1] == 10);

  const auto mixed = compose_scheme(Scheme::kMixed, pub, lb, 4.0, 1);
  const auto c = count_by_class(mixed);
  CHECK(c[0] == 10);  // no public child voice needed
  CHECK(c[1] == 10);  // 3 lb + 5 public, then resampled
  CHECK(c[2] == 10);  // 5 public, then resampled
  std::size_t public_child = 0;
  for (const auto& s : mixed)
    if (s.provenance.source == Source::kChimeHome && s.labels.primary() == Label::kChildVoice) ++public_child;
  CHECK(public_child == 0);
  // Every lb segment survives.
  for (std::size_t i = 0; i < lb.size(); ++i) CHECK(mixed[i].provenance.record_key == lb[i].provenance.record_key);

  CHECK_THROWS_AS(compose_scheme(Scheme::kMixed, {}, lb, 4.0, 1), ConfigError);
  CHECK_THROWS_AS(compose_scheme(Scheme::kResampled, pub, {}, 4.0, 1), ConfigError);
  CHECK(parse_scheme("mixed") == Scheme::kMixed);
  CHECK(parse_scheme("RESAMPLED") == Scheme::kResampled);
}

TEST_CASE("class minutes equal summed interval durations") {
  std::vector<ManifestRecord> recs;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 30.0);
  std::array<std::array<double, kNumSources>, kNumClasses> want{};
  for (int i = 0; i < 200; ++i) {
    ManifestRecord r;
    r.onset_s = 0;
    r.offset_s = u(rng);
    r.labels = LabelSet::from_bits(static_cast<std::uint8_t>(1 + rng() % 127));
    r.source = static_cast<Source>(rng() % kNumSources);
    for (auto l : r.labels.labels()) want[static_cast<std::size_t>(l)][static_cast<std::size_t>(r.source)] += r.offset_s;
    recs.push_back(r);
  }
  const auto table = class_minutes(recs);
  for (std::size_t c = 0; c < kNumClasses; ++c)
    for (std::size_t s = 0; s < kNumSources; ++s) CHECK(table[c][s] * 60.0 == doctest::Approx(want[c][s]).epsilon(1e-12));
  std::ostringstream out;
  write_minutes_table(out, table);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 8);
}

TEST_CASE("synthetic white noise is reproducible and scaled") {
  const auto a = synthesize_white_noise(3, 9);
  const auto b = synthesize_white_noise(3, 9);
  REQUIRE(a.size() == 3);
  CHECK(*a[2].samples == *b[2].samples);
  CHECK(*a[0].samples != *a[1].samples);
  double sq = 0;
  for (float v : a[0].audio()) sq += double(v) * v;
  CHECK(std::sqrt(sq / kSegmentSamples) == doctest::Approx(kWhiteNoiseScale).epsilon(0.02));
  CHECK(a[0].labels == LabelSet{Label::kWhiteNoise});
  CHECK(a[0].provenance.source == Source::kSynth);
}
