// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>

#include "slim/error.hpp"

namespace slim {
namespace {
std::atomic<bool> g_strict{true};
}

void set_strict(bool on) { g_strict.store(on, std::memory_order_relaxed); }
bool strict() { return g_strict.load(std::memory_order_relaxed); }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto s = std::make_shared<TensorStorage<T>>();
  s->value.assign(shape_numel(shape), value);
  s->shape = std::move(shape);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  if (values.size() != shape_numel(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_str(shape));
  }
  auto s = std::make_shared<TensorStorage<T>>();
  s->shape = std::move(shape);
  s->value = std::move(values);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return s_->value[0];
}

template <typename T>
std::span<T> Tensor<T>::grad() const {
  if (s_->grad.empty()) s_->grad.assign(s_->value.size(), T(0));
  return s_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() const {
  std::fill(s_->grad.begin(), s_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(s_->shape, s_->value, false);
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from(s_->shape, s_->value, s_->requires_grad);
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DimensionError("backward() needs a scalar loss, got shape " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) throw Error("backward() on a loss that does not require grad");
  loss.grad()[0] = T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  nodes_.clear();
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace slim
