// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boolgan/layers.hpp"

namespace boolgan {

enum class LayerKind { Conv, ConvTranspose, BatchNorm, Dropout, Activation };

std::string_view to_string(LayerKind kind) noexcept;

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  ConvGeometry geom{};            // Conv, ConvTranspose
  std::size_t channels = 0;       // BatchNorm
  double dropout_p = 0.0;         // Dropout
  Activation act{};               // Activation
};

/// An ordered, purely convolutional layer list. Shapes are per-sample
/// [C, H, W]; the batch axis is implicit.
struct ModelSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  Shape input;
  Shape output;
};

constexpr std::size_t kImageSize = 64;
constexpr std::size_t kImageChannels = 3;
constexpr double kLeakySlope = 0.2;

/// Per-layer output shapes; throws ShapeMismatch naming the first layer that
/// does not chain.
std::vector<Shape> trace_shapes(const ModelSpec& spec);

ModelSpec build_dcgan_generator(std::size_t z_dim, std::size_t base_width);
ModelSpec build_boolgan_generator(std::size_t z_dim, std::size_t base_width);
ModelSpec build_discriminator(bool critic_mode, double dropout_p, std::size_t base_width);

/// Number of trainable scalars (weights, biases, BN affine terms).
std::size_t parameter_count(const ModelSpec& spec);

enum class ParamRole { Weight, Bias, Gamma, Beta, RunningMean, RunningVar };

std::string_view to_string(ParamRole role) noexcept;

inline bool is_trainable(ParamRole role) noexcept {
  return role != ParamRole::RunningMean && role != ParamRole::RunningVar;
}

template <typename T>
struct Param {
  std::string name;
  std::size_t layer = 0;
  ParamRole role = ParamRole::Weight;
  Tensor<T> value;
};

/// Named parameters of one network in layer order, including the BatchNorm
/// running buffers (which are state, not trainable).
template <typename T>
struct ParamSet {
  std::vector<Param<T>> entries;

  Param<T>* find(std::string_view name) noexcept;
  const Param<T>* find(std::string_view name) const noexcept;
  const Tensor<T>& get(std::string_view name) const;

  /// Same names, roles and shapes; every value zero.
  ParamSet zeros_like() const;

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& p : entries)
      out.entries.push_back({p.name, p.layer, p.role, p.value.template cast<U>()});
    return out;
  }
};

std::string param_name(std::size_t layer, ParamRole role);

/// Conv weights ~ N(0, 0.02^2), BN gamma ~ N(1, 0.02^2), biases and beta 0,
/// running mean 0 and running variance 1.
template <typename T>
ParamSet<T> init_params(const ModelSpec& spec, RngStream& rng);

template <typename T>
struct ForwardCache {
  Mode mode = Mode::Train;
  /// inputs[i] is layer i's input; inputs.back() is the network output.
  std::vector<Tensor<T>> inputs;
  std::vector<Tensor<T>> dropout_masks;
  /// Running statistics produced by train-mode BatchNorm layers.
  std::vector<std::optional<BatchNormState<T>>> bn_updates;
};

template <typename T>
struct ForwardResult {
  Tensor<T> y;
  ForwardCache<T> cache;
};

/// Chains the layer forwards. Input is [N, C, H, W] matching spec.input.
/// Parameters are not mutated; train-mode running statistics are returned in
/// the cache for `apply_running_stats`.
template <typename T>
ForwardResult<T> forward(const ModelSpec& spec, const ParamSet<T>& params, const Tensor<T>& x,
                         Mode mode, RngStream& rng);

template <typename T>
void apply_running_stats(const ModelSpec& spec, ParamSet<T>& params, const ForwardCache<T>& cache);

template <typename T>
struct BackwardResult {
  Tensor<T> dx;        // empty unless requested
  ParamSet<T> grads;   // aligned with params; buffers stay zero
};

template <typename T>
BackwardResult<T> backward(const ModelSpec& spec, const ParamSet<T>& params,
                           const ForwardCache<T>& cache, const Tensor<T>& dy,
                           GradRequest request = {});

}  // namespace boolgan
