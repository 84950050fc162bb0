// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace slim {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Strict mode makes every op verify that its output is finite and throw
/// NumericError otherwise. On by default.
void set_strict(bool on);
bool strict();

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulated into
  bool requires_grad = false;
};

/// Dense row-major tensor handle. Copies share storage; use clone() or
/// detach() for a deep copy.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(s_); }
  const Shape& shape() const { return s_->shape; }
  int rank() const { return static_cast<int>(s_->shape.size()); }
  int dim(int i) const { return s_->shape.at(static_cast<std::size_t>(i)); }
  std::size_t numel() const { return s_->value.size(); }

  std::span<T> data() const { return s_->value; }
  T* ptr() const { return s_->value.data(); }
  T item() const;

  bool requires_grad() const { return s_->requires_grad; }
  void set_requires_grad(bool on) { s_->requires_grad = on; }

  bool has_grad() const { return !s_->grad.empty(); }
  /// Gradient buffer, allocated (zero-filled) on first access.
  std::span<T> grad() const;
  void zero_grad() const;

  /// Deep copy of the values without gradient tracking.
  Tensor detach() const;
  /// Deep copy keeping the requires_grad flag (grad not copied).
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return s_ == other.s_; }

 private:
  explicit Tensor(std::shared_ptr<TensorStorage<T>> s) : s_(std::move(s)) {}
  std::shared_ptr<TensorStorage<T>> s_;
};

/// Ordered record of executed differentiable ops. Record order is a valid
/// topological order, so backward walks it in reverse exactly once and then
/// empties the tape.
template <typename T>
class Tape {
 public:
  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }
  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every tensor
  /// that requires them. Throws DimensionError if loss is not a scalar.
  void backward(const Tensor<T>& loss);
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
};

}  // namespace slim
