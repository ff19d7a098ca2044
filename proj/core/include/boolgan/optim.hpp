// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "boolgan/models.hpp"

namespace boolgan {

enum class OptimizerKind { Adam, RmsProp };

std::string_view to_string(OptimizerKind kind) noexcept;

/// Per-parameter accumulators aligned with ParamSet::entries. Adam uses both
/// moments; RMSProp only `second`. Non-trainable entries keep empty tensors.
template <typename T>
struct OptState {
  OptimizerKind kind = OptimizerKind::Adam;
  std::vector<Tensor<T>> first;
  std::vector<Tensor<T>> second;
  std::uint64_t step = 0;
};

template <typename T>
OptState<T> make_opt_state(const ParamSet<T>& params, OptimizerKind kind);

constexpr double kOptimizerEps = 1e-8;

/// Bias-corrected Adam. Throws NonFinite naming the first bad gradient; the
/// parameters are left untouched in that case.
template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, OptState<T>& state, double lr,
               double beta1, double beta2, double eps = kOptimizerEps);

/// v <- rho*v + (1-rho)*g^2;  p <- p - lr*g/(sqrt(v) + eps)
template <typename T>
void rmsprop_step(ParamSet<T>& params, const ParamSet<T>& grads, OptState<T>& state, double lr,
                  double rho, double eps = kOptimizerEps);

}  // namespace boolgan
