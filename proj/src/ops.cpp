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

#include "cribtag/ops.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <type_traits>

#include "cribtag/error.hpp"

namespace cribtag {

namespace {

std::size_t normalize_axis(int axis, std::size_t rank, const Shape& shape) {
  const int r = static_cast<int>(rank);
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  return static_cast<std::size_t>(a);
}

// Splits a shape into (outer, axis length, inner) around one axis.
struct AxisView {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

void require_rank2(const Shape& s, const char* op) {
  if (s.size() != 2) throw ShapeError(std::string(op) + " expects a 2-D tensor, got " + shape_string(s));
}

bool is_trailing(const Shape& big, const Shape& small) {
  if (small.size() > big.size() || small.empty()) return false;
  return std::equal(small.begin(), small.end(), big.end() - static_cast<long>(small.size()));
}

}  // namespace

void set_gemm_threads(int threads) { openblas_set_num_threads(std::max(1, threads)); }

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, T alpha,
          const T* a, const T* b, T beta, T* c) {
  const auto ta = trans_a ? CblasTrans : CblasNoTrans;
  const auto tb = trans_b ? CblasTrans : CblasNoTrans;
  const int lda = static_cast<int>(trans_a ? m : k);
  const int ldb = static_cast<int>(trans_b ? k : n);
  const int ldc = static_cast<int>(n);
  if constexpr (std::is_same_v<T, float>) {
    cblas_sgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, lda, b, ldb, beta, c, ldc);
  } else {
    // OpenBLAS's threaded split changes rounding; 64-bit runs single-threaded
    // so results do not depend on the thread count.
    const int threads = openblas_get_num_threads();
    if (threads != 1) openblas_set_num_threads(1);
    cblas_dgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, lda, b, ldb, beta, c, ldc);
    if (threads != 1) openblas_set_num_threads(threads);
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul shape mismatch: " + shape_string(a.shape()) + " . " +
                     shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<T> out(m * n);
  gemm<T>(false, false, m, n, k, T(1), a.data().data(), b.data().data(), T(0), out.data());
  return make_op_result<T>("matmul", {m, n}, std::move(out), {&a, &b},
                           [a, b, m, n, k](TensorNode<T>& o) {
                             if (a.requires_grad()) {
                               std::vector<T> da(m * k);
                               gemm<T>(false, true, m, k, n, T(1), o.grad.data(),
                                       b.data().data(), T(0), da.data());
                               accumulate_grad<T>(a, da);
                             }
                             if (b.requires_grad()) {
                               std::vector<T> db(k * n);
                               gemm<T>(true, false, k, n, m, T(1), a.data().data(),
                                       o.grad.data(), T(0), db.data());
                               accumulate_grad<T>(b, db);
                             }
                           });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() == b.shape()) {
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return make_op_result<T>("add", a.shape(), std::move(out), {&a, &b},
                             [a, b](TensorNode<T>& o) {
                               accumulate_grad<T>(a, o.grad);
                               accumulate_grad<T>(b, o.grad);
                             });
  }
  if (!is_trailing(a.shape(), b.shape())) {
    throw ShapeError("add shape mismatch: " + shape_string(a.shape()) + " + " +
                     shape_string(b.shape()));
  }
  const std::size_t inner = b.size();
  const std::size_t outer = a.size() / inner;
  std::vector<T> out(a.size());
  for (std::size_t r = 0; r < outer; ++r) {
    for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] = a[r * inner + i] + b[i];
  }
  return make_op_result<T>("add", a.shape(), std::move(out), {&a, &b},
                           [a, b, outer, inner](TensorNode<T>& o) {
                             accumulate_grad<T>(a, o.grad);
                             if (b.requires_grad()) {
                               std::vector<T> db(inner, T(0));
                               for (std::size_t r = 0; r < outer; ++r) {
                                 for (std::size_t i = 0; i < inner; ++i) db[i] += o.grad[r * inner + i];
                               }
                               accumulate_grad<T>(b, db);
                             }
                           });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul shape mismatch: " + shape_string(a.shape()) + " * " +
                     shape_string(b.shape()));
  }
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_op_result<T>("mul", a.shape(), std::move(out), {&a, &b}, [a, b](TensorNode<T>& o) {
    const std::size_t n = o.grad.size();
    if (a.requires_grad()) {
      std::vector<T> da(n);
      for (std::size_t i = 0; i < n; ++i) da[i] = o.grad[i] * b[i];
      accumulate_grad<T>(a, da);
    }
    if (b.requires_grad()) {
      std::vector<T> db(n);
      for (std::size_t i = 0; i < n; ++i) db[i] = o.grad[i] * a[i];
      accumulate_grad<T>(b, db);
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return make_op_result<T>("scale", x.shape(), std::move(out), {&x}, [x, factor](TensorNode<T>& o) {
    std::vector<T> dx(o.grad.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = o.grad[i] * factor;
    accumulate_grad<T>(x, dx);
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank2(x.shape(), "transpose");
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  }
  return make_op_result<T>("transpose", {c, r}, std::move(out), {&x}, [x, r, c](TensorNode<T>& o) {
    std::vector<T> dx(r * c);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) dx[i * c + j] = o.grad[j * r + i];
    }
    accumulate_grad<T>(x, dx);
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw ShapeError("cannot reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_op_result<T>("reshape", std::move(shape), std::move(out), {&x},
                           [x](TensorNode<T>& o) { accumulate_grad<T>(x, o.grad); });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  const std::size_t ax = normalize_axis(axis, first.size(), first);
  Shape out_shape = first;
  out_shape[ax] = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size()) {
      throw ShapeError("concat rank mismatch: " + shape_string(first) + " vs " + shape_string(s));
    }
    out_shape[ax] += s[ax];
    s[ax] = first[ax];
    if (s != first) {
      throw ShapeError("concat shape mismatch off axis " + std::to_string(axis) + ": " +
                       shape_string(first) + " vs " + shape_string(p.shape()));
    }
  }
  const AxisView ov = axis_view(out_shape, ax);
  std::vector<T> out(numel(out_shape));
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t len = p.shape()[ax];
    for (std::size_t o = 0; o < ov.outer; ++o) {
      const T* src = p.data().data() + o * len * ov.inner;
      std::copy(src, src + len * ov.inner, out.begin() + static_cast<long>((o * ov.len + offset) * ov.inner));
    }
    offset += len;
  }
  std::vector<const Tensor<T>*> inputs;
  for (const auto& p : parts) inputs.push_back(&p);
  return make_op_result<T>("concat", out_shape, std::move(out), inputs,
                           [parts, ax, ov](TensorNode<T>& o) {
                             std::size_t off = 0;
                             for (const auto& p : parts) {
                               const std::size_t len = p.shape()[ax];
                               if (p.requires_grad()) {
                                 std::vector<T> dp(p.size());
                                 for (std::size_t q = 0; q < ov.outer; ++q) {
                                   const T* src = o.grad.data() + (q * ov.len + off) * ov.inner;
                                   std::copy(src, src + len * ov.inner,
                                             dp.begin() + static_cast<long>(q * len * ov.inner));
                                 }
                                 accumulate_grad<T>(p, dp);
                               }
                               off += len;
                             }
                           });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::size_t start, std::size_t length) {
  const std::size_t ax = normalize_axis(axis, x.rank(), x.shape());
  if (length == 0 || start + length > x.shape()[ax]) {
    throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") out of range on axis " + std::to_string(axis) + " of " +
                     shape_string(x.shape()));
  }
  const AxisView v = axis_view(x.shape(), ax);
  Shape out_shape = x.shape();
  out_shape[ax] = length;
  std::vector<T> out(numel(out_shape));
  for (std::size_t o = 0; o < v.outer; ++o) {
    const T* src = x.data().data() + (o * v.len + start) * v.inner;
    std::copy(src, src + length * v.inner, out.begin() + static_cast<long>(o * length * v.inner));
  }
  return make_op_result<T>("slice", out_shape, std::move(out), {&x},
                           [x, v, start, length](TensorNode<T>& o) {
                             std::vector<T> dx(x.size(), T(0));
                             for (std::size_t q = 0; q < v.outer; ++q) {
                               const T* src = o.grad.data() + q * length * v.inner;
                               std::copy(src, src + length * v.inner,
                                         dx.begin() + static_cast<long>((q * v.len + start) * v.inner));
                             }
                             accumulate_grad<T>(x, dx);
                           });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.rank(), x.shape());
  const AxisView v = axis_view(x.shape(), ax);
  std::vector<T> out(x.size());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.len * v.inner + in;
      T mx = x[base];
      for (std::size_t i = 1; i < v.len; ++i) mx = std::max(mx, x[base + i * v.inner]);
      T total = 0;
      for (std::size_t i = 0; i < v.len; ++i) {
        const T e = std::exp(x[base + i * v.inner] - mx);
        out[base + i * v.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < v.len; ++i) out[base + i * v.inner] /= total;
    }
  }
  return make_op_result<T>("softmax", x.shape(), std::move(out), {&x}, [x, v](TensorNode<T>& o) {
    std::vector<T> dx(x.size());
    for (std::size_t q = 0; q < v.outer; ++q) {
      for (std::size_t in = 0; in < v.inner; ++in) {
        const std::size_t base = q * v.len * v.inner + in;
        T dot = 0;
        for (std::size_t i = 0; i < v.len; ++i) {
          const std::size_t j = base + i * v.inner;
          dot += o.grad[j] * o.data[j];
        }
        for (std::size_t i = 0; i < v.len; ++i) {
          const std::size_t j = base + i * v.inner;
          dx[j] = o.data[j] * (o.grad[j] - dot);
        }
      }
    }
    accumulate_grad<T>(x, dx);
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const T inv_sqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = T(0.5) * x[i] * (T(1) + std::erf(x[i] * inv_sqrt2));
  }
  return make_op_result<T>("gelu", x.shape(), std::move(out), {&x}, [x, inv_sqrt2](TensorNode<T>& o) {
    const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> * inv_sqrt2;
    std::vector<T> dx(x.size());
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const T v = x[i];
      const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
      dx[i] = o.grad[i] * (cdf + v * pdf);
    }
    accumulate_grad<T>(x, dx);
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x[i];
    if (v >= 0) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  return make_op_result<T>("sigmoid", x.shape(), std::move(out), {&x}, [x](TensorNode<T>& o) {
    std::vector<T> dx(x.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = o.grad[i] * o.data[i] * (T(1) - o.data[i]);
    accumulate_grad<T>(x, dx);
  });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
  if (x.rank() == 0) throw ShapeError("layer_norm on a scalar");
  const std::size_t d = x.shape().back();
  if (d == 0) throw ShapeError("layer_norm over an empty dimension");
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: x " + shape_string(x.shape()) + " needs gamma/beta of [" +
                     std::to_string(d) + "], got " + shape_string(gamma.shape()) + " and " +
                     shape_string(beta.shape()));
  }
  const std::size_t rows = x.size() / d;
  std::vector<T> out(x.size());
  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.data().data() + r * d;
    T mu = 0;
    for (std::size_t i = 0; i < d; ++i) mu += row[i];
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= static_cast<T>(d);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t i = 0; i < d; ++i) {
      const T h = (row[i] - mu) * is;
      xhat[r * d + i] = h;
      out[r * d + i] = h * gamma[i] + beta[i];
    }
  }
  return make_op_result<T>(
      "layer_norm", x.shape(), std::move(out), {&x, &gamma, &beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
       d](TensorNode<T>& o) {
        std::vector<T> dx(x.size());
        std::vector<T> dgamma(d, T(0)), dbeta(d, T(0));
        std::vector<T> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = o.grad.data() + r * d;
          const T* h = xhat.data() + r * d;
          T mean_dh = 0, mean_dh_h = 0;
          for (std::size_t i = 0; i < d; ++i) {
            dh[i] = g[i] * gamma[i];
            mean_dh += dh[i];
            mean_dh_h += dh[i] * h[i];
            dgamma[i] += g[i] * h[i];
            dbeta[i] += g[i];
          }
          mean_dh /= static_cast<T>(d);
          mean_dh_h /= static_cast<T>(d);
          for (std::size_t i = 0; i < d; ++i) {
            dx[r * d + i] = inv_std[r] * (dh[i] - mean_dh - h[i] * mean_dh_h);
          }
        }
        accumulate_grad<T>(x, dx);
        accumulate_grad<T>(gamma, dgamma);
        accumulate_grad<T>(beta, dbeta);
      });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  return make_op_result<T>("sum", {}, {total}, {&x}, [x](TensorNode<T>& o) {
    std::vector<T> dx(x.size(), o.grad[0]);
    accumulate_grad<T>(x, dx);
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  const T n = static_cast<T>(x.size());
  return make_op_result<T>("mean", {}, {total / n}, {&x}, [x, n](TensorNode<T>& o) {
    std::vector<T> dx(x.size(), o.grad[0] / n);
    accumulate_grad<T>(x, dx);
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.rank(), x.shape());
  const AxisView v = axis_view(x.shape(), ax);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<long>(ax));
  std::vector<T> out(v.outer * v.inner, T(0));
  const T n = static_cast<T>(v.len);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t i = 0; i < v.len; ++i) {
      const T* src = x.data().data() + (o * v.len + i) * v.inner;
      T* dst = out.data() + o * v.inner;
      for (std::size_t in = 0; in < v.inner; ++in) dst[in] += src[in];
    }
  }
  for (auto& val : out) val /= n;
  return make_op_result<T>("mean_axis", out_shape, std::move(out), {&x}, [x, v, n](TensorNode<T>& o) {
    std::vector<T> dx(x.size());
    for (std::size_t q = 0; q < v.outer; ++q) {
      for (std::size_t i = 0; i < v.len; ++i) {
        for (std::size_t in = 0; in < v.inner; ++in) {
          dx[(q * v.len + i) * v.inner + in] = o.grad[q * v.inner + in] / n;
        }
      }
    }
    accumulate_grad<T>(x, dx);
  });
}

#define CRIBTAG_INSTANTIATE(T)                                                                   \
  template void gemm<T>(bool, bool, std::size_t, std::size_t, std::size_t, T, const T*,          \
                        const T*, T, T*);                                                        \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                              \
  template Tensor<T> transpose<T>(const Tensor<T>&);                                             \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                        \
  template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int);                              \
  template Tensor<T> slice<T>(const Tensor<T>&, int, std::size_t, std::size_t);                  \
  template Tensor<T> softmax<T>(const Tensor<T>&, int);                                          \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                                  \
  template Tensor<T> sigmoid<T>(const Tensor<T>&);                                               \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);     \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                   \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                  \
  template Tensor<T> mean<T>(const Tensor<T>&, int);

CRIBTAG_INSTANTIATE(float)
CRIBTAG_INSTANTIATE(double)

#undef CRIBTAG_INSTANTIATE

}  // namespace cribtag
