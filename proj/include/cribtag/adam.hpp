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
#include <vector>

#include "cribtag/tensor.hpp"

namespace cribtag {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers for a fixed list of parameters. Only the
// parameters handed to init() get state, so frozen weights cost nothing.
template <typename T>
struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  void init(const std::vector<Tensor<T>>& params);
};

// One bias-corrected Adam update of every parameter from its gradient.
// Parameters without a gradient buffer are treated as having zero gradient.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state, double lr);

}  // namespace cribtag
