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

#include "cribtag/adam.hpp"

#include <cmath>
#include <utility>

#include "cribtag/error.hpp"

namespace cribtag {

template <typename T>
void AdamState<T>::init(const std::vector<Tensor<T>>& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.size(), T(0));
    v.emplace_back(p.size(), T(0));
  }
}

template <typename T>
void adam_step(std::vector<Tensor<T>>& params, AdamState<T>& state, double lr) {
  if (!(lr > 0)) throw ContractError("adam_step needs lr > 0, got " + std::to_string(lr));
  if (params.size() != state.m.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but state for " +
                     std::to_string(state.m.size()));
  }
  state.step += 1;
  const auto& o = state.options;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& param = params[p];
    auto& m = state.m[p];
    auto& v = state.v[p];
    if (m.size() != param.size()) {
      throw ShapeError("adam_step: moment buffer size " + std::to_string(m.size()) +
                       " does not match parameter " + shape_string(param.shape()));
    }
    if (!param.has_grad()) continue;
    const auto g = std::as_const(param).grad();
    auto w = param.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const double mhat = static_cast<double>(m[i]) / bc1;
      const double vhat = static_cast<double>(v[i]) / bc2;
      w[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + o.eps));
    }
  }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::vector<Tensor<float>>&, AdamState<float>&, double);
template void adam_step<double>(std::vector<Tensor<double>>&, AdamState<double>&, double);

}  // namespace cribtag
