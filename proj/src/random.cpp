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

#include "cribtag/random.hpp"

#include <cstdlib>
#include <string>

namespace cribtag {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t sample_id, std::uint64_t epoch) {
  return mix64(mix64(mix64(global_seed) ^ sample_id) ^ (epoch * 0x2545f4914f6cdd1dULL));
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* env = std::getenv("CRIBTAG_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    return fallback;
  }
}

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  return dist(rng);
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace cribtag
