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

#include <cstdint>
#include <random>

namespace cribtag {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Stable per-sample seed: hash(global_seed, sample_id, epoch).
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t sample_id, std::uint64_t epoch);

// Global seed fallback from the CRIBTAG_SEED environment variable.
std::uint64_t seed_from_env(std::uint64_t fallback);

// Inclusive uniform integer in [lo, hi].
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// Standard normal draw.
double standard_normal(Rng& rng);

}  // namespace cribtag
