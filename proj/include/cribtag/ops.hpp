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

// Differentiable tensor operations. Shapes must match exactly, except that
// add() broadcasts a right-hand operand whose shape equals the trailing
// dimensions of the left-hand one (bias addition). Every other mismatch is a
// ShapeError.

#pragma once

#include <vector>

#include "cribtag/tensor.hpp"

namespace cribtag {

// a[m x k] . b[k x n] -> [m x n]
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

// Elementwise product of equally shaped tensors.
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);

// 2-D transpose.
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);

// Elements [start, start + length) along `axis`.
template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::size_t start, std::size_t length);

// Max-subtracted softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);

// Exact (erf-based) GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

// Normalizes each row of the last dimension to zero mean and unit (biased)
// variance, then applies gamma and beta.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

// Reductions to a scalar.
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

// Mean over one axis; the axis is removed from the result.
template <typename T>
Tensor<T> mean(const Tensor<T>& x, int axis);

// Plain (non-recording) GEMM used by the ops and by inference fast paths.
// C = alpha * op(A) * op(B) + beta * C with row-major storage.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
          const T* a, const T* b, T beta, T* c);

// Number of threads the 32-bit GEMM backend may use; 64-bit always uses one.
void set_gemm_threads(int threads);

}  // namespace cribtag
