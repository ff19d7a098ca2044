// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "boolgan/models.hpp"

namespace boolgan {

/// Probabilities are clamped to [eps, 1 - eps] before any log.
constexpr double kProbabilityClamp = 1e-7;

// Both adversarial objectives are maximized in theory; every function here
// returns the negated objective so one descent code path serves all players.

/// -mean(log d_real) - mean(log(1 - d_fake))
template <typename T>
double dcgan_d_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake);

/// Non-saturating generator loss: -mean(log d_fake).
template <typename T>
double dcgan_g_loss(const Tensor<T>& d_fake);

/// -(mean f_real - mean f_fake)
template <typename T>
double wgan_critic_loss(const Tensor<T>& f_real, const Tensor<T>& f_fake);

/// -mean f_fake
template <typename T>
double wgan_g_loss(const Tensor<T>& f_fake);

template <typename T>
struct ScoreGrads {
  Tensor<T> real;
  Tensor<T> fake;
};

template <typename T>
ScoreGrads<T> dcgan_d_loss_grads(const Tensor<T>& d_real, const Tensor<T>& d_fake);
template <typename T>
Tensor<T> dcgan_g_loss_grad(const Tensor<T>& d_fake);
/// Gradients of the same DCGAN losses with respect to the logit l, where the
/// score is sigmoid(l): -(1 - d)/n for -log d and d/n for -log(1 - d). Unlike
/// the probability-space gradients they do not vanish under the clamp, so a
/// confidently rejected fake still pulls on the generator.
template <typename T>
ScoreGrads<T> dcgan_d_logit_grads(const Tensor<T>& d_real, const Tensor<T>& d_fake);

template <typename T>
Tensor<T> dcgan_g_logit_grad(const Tensor<T>& d_fake);

template <typename T>
ScoreGrads<T> wgan_critic_loss_grads(const Tensor<T>& f_real, const Tensor<T>& f_fake);
template <typename T>
Tensor<T> wgan_g_loss_grad(const Tensor<T>& f_fake);

struct ClipOptions {
  /// Also clamp BatchNorm gamma/beta. Running statistics are never touched.
  bool include_batchnorm = true;
};

/// Clamps every trainable critic parameter elementwise into [-c, c].
template <typename T>
void clip_weights(ParamSet<T>& params, double c, ClipOptions options = {});

/// Largest |value| over the tensors clip_weights would touch.
template <typename T>
double max_clipped_magnitude(const ParamSet<T>& params, ClipOptions options = {});

}  // namespace boolgan
