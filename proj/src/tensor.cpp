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

#include "cribtag/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "cribtag/error.hpp"

namespace cribtag {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

std::atomic<bool> g_check_finite{false};

template <typename T>
Tape<T>*& tape_slot() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}

}  // namespace

void set_check_finite(bool enabled) { g_check_finite.store(enabled); }
bool check_finite_enabled() { return g_check_finite.load(); }

template <typename T>
Tensor<T>::Tensor(Shape shape, bool requires_grad) : node_(std::make_shared<TensorNode<T>>()) {
  check_shape(shape);
  node_->data.assign(numel(shape), T(0));
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : node_(std::make_shared<TensorNode<T>>()) {
  check_shape(shape);
  if (numel(shape) != data.size()) {
    throw ShapeError("shape " + shape_string(shape) + " needs " + std::to_string(numel(shape)) +
                     " values, got " + std::to_string(data.size()));
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  Tensor t(std::move(shape));
  std::fill(t.node_->data.begin(), t.node_->data.end(), value);
  return t;
}

template <typename T>
std::size_t Tensor<T>::dim(int axis) const {
  const int r = static_cast<int>(rank());
  const int a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(a)];
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  node_->requires_grad = on;
  if (!on) node_->grad.clear();
}

template <typename T>
std::span<T> Tensor<T>::grad() {
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), T(0));
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return Tensor(node_->shape, node_->data, node_->requires_grad);
}

template <typename T>
void Tape<T>::record(std::shared_ptr<TensorNode<T>> output, BackwardFn fn) {
  records_.push_back({std::move(output), std::move(fn)});
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) {
    records_.clear();
    throw ContractError("backward() on a loss that does not depend on any trainable tensor");
  }
  auto& seed = loss.node()->grad;
  seed.assign(1, T(1));
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output->grad.empty()) continue;  // not on a path to the loss
    it->backward(*it->output);
  }
  records_.clear();
}

template <typename T>
Tape<T>* active_tape() {
  return tape_slot<T>();
}

template <typename T>
TapeScope<T>::TapeScope(Tape<T>& tape) : previous_(tape_slot<T>()) {
  tape_slot<T>() = &tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  tape_slot<T>() = previous_;
}

template <typename T>
Tensor<T> make_op_result(std::string_view op_name, Shape shape, std::vector<T> data,
                         const std::vector<const Tensor<T>*>& inputs,
                         typename Tape<T>::BackwardFn backward) {
  if (check_finite_enabled()) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!std::isfinite(data[i])) {
        throw NumericError("non-finite value at index " + std::to_string(i) + " in output of " +
                           std::string(op_name));
      }
    }
  }
  Tape<T>* tape = active_tape<T>();
  bool needs_grad = false;
  if (tape != nullptr) {
    for (const auto* in : inputs) needs_grad = needs_grad || in->requires_grad();
  }
  Tensor<T> out(std::move(shape), std::move(data), needs_grad);
  if (needs_grad) tape->record(out.node(), std::move(backward));
  return out;
}

template <typename T>
void accumulate_grad(const Tensor<T>& t, std::span<const T> delta) {
  auto& node = *t.node();
  if (!node.requires_grad) return;
  if (node.grad.empty()) node.grad.assign(node.data.size(), T(0));
  for (std::size_t i = 0; i < delta.size(); ++i) node.grad[i] += delta[i];
}

#define CRIBTAG_INSTANTIATE(T)                                                                   \
  template class Tensor<T>;                                                                      \
  template class Tape<T>;                                                                        \
  template class TapeScope<T>;                                                                   \
  template Tape<T>* active_tape<T>();                                                            \
  template Tensor<T> make_op_result<T>(std::string_view, Shape, std::vector<T>,                  \
                                       const std::vector<const Tensor<T>*>&,                  \
                                       typename Tape<T>::BackwardFn);                            \
  template void accumulate_grad<T>(const Tensor<T>&, std::span<const T>);

CRIBTAG_INSTANTIATE(float)
CRIBTAG_INSTANTIATE(double)

#undef CRIBTAG_INSTANTIATE

}  // namespace cribtag
