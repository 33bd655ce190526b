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

// Dense row-major tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle to a TensorNode: copying a Tensor aliases the
// same storage, clone() makes a deep copy. Operations executed while a Tape is
// active (see TapeScope) and that consume at least one tensor requiring grad
// are recorded on the tape; Tape::backward() replays them in reverse order.
// Everything is instantiated for float (training) and double (gradient
// checks).

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cribtag {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  // Empty until the first gradient contribution arrives.
  std::vector<T> grad;
  bool requires_grad = false;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, T value);
  static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  // Negative axes count from the end.
  std::size_t dim(int axis) const;
  std::size_t size() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T item() const;
  T& operator[](std::size_t i) { return node_->data[i]; }
  const T& operator[](std::size_t i) const { return node_->data[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return !node_->grad.empty(); }
  // Allocates a zero gradient buffer on first access.
  std::span<T> grad();
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad();

  // Deep copy that does not participate in any tape.
  Tensor clone() const;

  const TensorNode<T>* id() const { return node_.get(); }
  const std::shared_ptr<TensorNode<T>>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

// Ordered record of differentiable operations. Confined to one thread and one
// training step; backward() consumes the records.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(TensorNode<T>& out)>;

  void record(std::shared_ptr<TensorNode<T>> output, BackwardFn fn);
  // Seeds d(loss)/d(loss) = 1 and visits every record once, newest first.
  // Clears the tape afterwards.
  void backward(const Tensor<T>& loss);
  std::size_t size() const { return records_.size(); }
  void clear() { records_.clear(); }

 private:
  struct Record {
    std::shared_ptr<TensorNode<T>> output;
    BackwardFn backward;
  };
  std::vector<Record> records_;
};

// Tape that operations on this thread currently record into, or nullptr.
template <typename T>
Tape<T>* active_tape();

// Installs a tape for the current thread for the lifetime of the scope.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

// When enabled, every operation result is scanned for NaN/Inf and a
// NumericError naming the operation is thrown on the first hit.
void set_check_finite(bool enabled);
bool check_finite_enabled();

// Builds the result of an operation and, when a tape is active and any input
// requires grad, records `backward` for it. Operation implementations outside
// this library (losses, fused kernels) use this to join the tape.
template <typename T>
Tensor<T> make_op_result(std::string_view op_name, Shape shape, std::vector<T> data,
                         const std::vector<const Tensor<T>*>& inputs,
                         typename Tape<T>::BackwardFn backward);

// Accumulates `delta` into the gradient of `t` if it requires grad.
template <typename T>
void accumulate_grad(const Tensor<T>& t, std::span<const T> delta);

}  // namespace cribtag
