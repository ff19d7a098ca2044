// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boolgan/error.hpp"

namespace boolgan {

using Shape = std::vector<std::size_t>;

enum class DType : std::uint8_t { F32, F64 };

std::string_view to_string(DType dtype) noexcept;

template <typename T>
constexpr DType dtype_of() noexcept;
template <>
constexpr DType dtype_of<float>() noexcept { return DType::F32; }
template <>
constexpr DType dtype_of<double>() noexcept { return DType::F64; }

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string shape_string(const Shape& shape);

/// Dense row-major tensor. The value type of every activation, parameter and
/// gradient in the engine; `float` for training and `double` for verification.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(data_.size() == element_count(shape_), ErrorKind::ShapeMismatch,
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_string(shape_));
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // NCHW indexing for rank-4 tensors.
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  Tensor reshaped(Shape shape) const {
    require(element_count(shape) == data_.size(), ErrorKind::ShapeMismatch,
            "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
void check_finite(const Tensor<T>& t, std::string_view what) {
  if (!all_finite(t)) fail(ErrorKind::NonFinite, "non-finite value in " + std::string(what));
}

template <typename T>
void require_shape(const Tensor<T>& t, const Shape& expected, std::string_view what) {
  if (t.shape() != expected)
    fail(ErrorKind::ShapeMismatch, std::string(what) + ": expected shape " +
                                       shape_string(expected) + ", got " +
                                       shape_string(t.shape()));
}

template <typename T>
double sum(const Tensor<T>& t) {
  double s = 0.0;
  for (T v : t.values()) s += v;
  return s;
}

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.size() == b.size(), ErrorKind::ShapeMismatch, "dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

template <typename T>
double max_abs(const Tensor<T>& t) {
  double m = 0.0;
  for (T v : t.values()) m = std::max(m, std::abs(double(v)));
  return m;
}

template <typename T>
void axpy(T alpha, const Tensor<T>& x, Tensor<T>& y) {
  require(x.size() == y.size(), ErrorKind::ShapeMismatch, "axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace boolgan
