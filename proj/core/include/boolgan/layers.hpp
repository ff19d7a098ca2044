// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

#include "boolgan/rng.hpp"
#include "boolgan/tensor.hpp"

namespace boolgan {

enum class Mode { Train, Eval };

/// Square-kernel, zero-padded convolution geometry. For conv2d the weight is
/// [out, in, k, k]; for convtranspose2d it is [in, out, k, k].
struct ConvGeometry {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

void validate(const ConvGeometry& geom);

/// (in + 2p - k) / s + 1; throws when the division is inexact or the result
/// is not positive.
std::size_t conv_output_extent(std::size_t in, const ConvGeometry& geom);
/// (in - 1) * s - 2p + k
std::size_t convtranspose_output_extent(std::size_t in, const ConvGeometry& geom);

Shape conv_weight_shape(const ConvGeometry& geom);
Shape convtranspose_weight_shape(const ConvGeometry& geom);

template <typename T>
struct ConvGrads {
  Tensor<T> dx;
  Tensor<T> dw;
  Tensor<T> db;
};

/// Which gradients a backward call should produce. Skipping dx on a network's
/// first layer or dw/db on a frozen opponent saves most of the work.
struct GradRequest {
  bool input = true;
  bool params = true;
};

/// Cross-correlation (no kernel flip) with zero padding, plus bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvGeometry& geom);

template <typename T>
ConvGrads<T> conv2d_grads(const Tensor<T>& x, const Tensor<T>& w, const ConvGeometry& geom,
                          const Tensor<T>& dy, GradRequest request = {});

/// The exact adjoint of conv2d under the same geometry, plus bias.
template <typename T>
Tensor<T> convtranspose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                          const ConvGeometry& geom);

template <typename T>
ConvGrads<T> convtranspose2d_grads(const Tensor<T>& x, const Tensor<T>& w,
                                   const ConvGeometry& geom, const Tensor<T>& dy,
                                   GradRequest request = {});

template <typename T>
struct BatchNormState {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

template <typename T>
BatchNormState<T> make_batchnorm_state(std::size_t channels);

template <typename T>
struct BatchNormResult {
  Tensor<T> y;
  BatchNormState<T> state;
};

/// Train mode normalizes by the biased batch variance and folds the unbiased
/// variance into the running estimate; eval mode uses the running estimates.
template <typename T>
BatchNormResult<T> batchnorm2d(const Tensor<T>& x, const BatchNormState<T>& state, Mode mode);

template <typename T>
struct BatchNormGrads {
  Tensor<T> dx;
  Tensor<T> dgamma;
  Tensor<T> dbeta;
};

/// Train-mode gradients, including the paths through the batch statistics.
template <typename T>
BatchNormGrads<T> batchnorm2d_grads(const Tensor<T>& x, const BatchNormState<T>& state,
                                    const Tensor<T>& dy);

template <typename T>
struct DropoutResult {
  Tensor<T> y;
  /// 0 for dropped entries, 1/(1-p) for kept ones.
  Tensor<T> mask;
};

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& x, double p, Mode mode, RngStream& rng);

template <typename T>
Tensor<T> dropout_grad(const Tensor<T>& dy, const Tensor<T>& mask);

enum class ActivationKind { Relu, LeakyRelu, Tanh, Sigmoid };

struct Activation {
  ActivationKind kind = ActivationKind::Relu;
  double alpha = 0.2;  // leaky slope

  friend bool operator==(const Activation&, const Activation&) = default;
};

std::string_view to_string(ActivationKind kind) noexcept;

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation act);

/// Gradient given the forward input `x` and output `y`.
template <typename T>
Tensor<T> activation_grad(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy,
                          Activation act);

}  // namespace boolgan
