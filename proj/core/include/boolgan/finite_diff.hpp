// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>

#include "boolgan/tensor.hpp"

namespace boolgan {

/// Central-difference gradient of a scalar function. Used as the independent
/// oracle for every hand-written backward pass; run it in double precision.
template <typename T, typename F>
Tensor<T> finite_diff_grad(F&& f, const Tensor<T>& x, double eps) {
  require(eps > 0.0, ErrorKind::InvalidArgument, "finite_diff_grad: eps must be positive");
  Tensor<T> grad(x.shape());
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T original = probe[i];
    probe[i] = static_cast<T>(original + eps);
    const double plus = f(static_cast<const Tensor<T>&>(probe));
    probe[i] = static_cast<T>(original - eps);
    const double minus = f(static_cast<const Tensor<T>&>(probe));
    probe[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus))
      fail(ErrorKind::NonFinite,
           "finite_diff_grad: non-finite function value at element " + std::to_string(i));
    grad[i] = static_cast<T>((plus - minus) / (2.0 * eps));
  }
  return grad;
}

/// max_i |a_i - b_i| / max(max_i |b_i|, floor). Relative to the reference
/// tensor's scale, so entries near zero do not dominate.
template <typename T>
double max_relative_error(const Tensor<T>& analytic, const Tensor<T>& reference,
                          double floor = 1e-12) {
  require(analytic.size() == reference.size(), ErrorKind::ShapeMismatch,
          "max_relative_error: size mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    diff = std::max(diff, std::abs(double(analytic[i]) - double(reference[i])));
  return diff / std::max(max_abs(reference), floor);
}

}  // namespace boolgan
