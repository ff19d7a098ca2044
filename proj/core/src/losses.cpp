// SPDX-License-Identifier: Apache-2.0
#include "boolgan/losses.hpp"

#include <algorithm>
#include <cmath>

namespace boolgan {

namespace {

template <typename T>
double mean_log(const Tensor<T>& p, bool complement) {
  double acc = 0.0;
  for (T v : p.values()) {
    const double q = std::clamp<double>(v, kProbabilityClamp, 1.0 - kProbabilityClamp);
    acc += std::log(complement ? 1.0 - q : q);
  }
  return acc / static_cast<double>(p.size());
}

// d/dp of -mean(log p) (or of -mean(log(1 - p)) when complement is set);
// zero where the clamp is active.
template <typename T>
Tensor<T> mean_log_grad(const Tensor<T>& p, bool complement) {
  Tensor<T> g(p.shape());
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = p[i];
    if (v <= kProbabilityClamp || v >= 1.0 - kProbabilityClamp) continue;
    g[i] = static_cast<T>(complement ? 1.0 / (n * (1.0 - v)) : -1.0 / (n * v));
  }
  return g;
}

template <typename T>
double mean(const Tensor<T>& t) {
  return sum(t) / static_cast<double>(t.size());
}

template <typename T>
Tensor<T> constant_like(const Tensor<T>& t, double value) {
  return Tensor<T>(t.shape(), static_cast<T>(value));
}

template <typename T>
void require_scores(const Tensor<T>& t, const char* what) {
  require(!t.empty(), ErrorKind::InvalidArgument, std::string(what) + ": empty score tensor");
}

bool clipped_role(ParamRole role, ClipOptions options) {
  if (!is_trainable(role)) return false;
  if (role == ParamRole::Gamma || role == ParamRole::Beta) return options.include_batchnorm;
  return true;
}

}  // namespace

template <typename T>
double dcgan_d_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  require_scores(d_real, "dcgan_d_loss");
  require_scores(d_fake, "dcgan_d_loss");
  return -mean_log(d_real, false) - mean_log(d_fake, true);
}

template <typename T>
double dcgan_g_loss(const Tensor<T>& d_fake) {
  require_scores(d_fake, "dcgan_g_loss");
  return -mean_log(d_fake, false);
}

template <typename T>
double wgan_critic_loss(const Tensor<T>& f_real, const Tensor<T>& f_fake) {
  require_scores(f_real, "wgan_critic_loss");
  require_scores(f_fake, "wgan_critic_loss");
  return -(mean(f_real) - mean(f_fake));
}

template <typename T>
double wgan_g_loss(const Tensor<T>& f_fake) {
  require_scores(f_fake, "wgan_g_loss");
  return -mean(f_fake);
}

template <typename T>
ScoreGrads<T> dcgan_d_loss_grads(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  return {mean_log_grad(d_real, false), mean_log_grad(d_fake, true)};
}

template <typename T>
Tensor<T> dcgan_g_loss_grad(const Tensor<T>& d_fake) {
  return mean_log_grad(d_fake, false);
}

namespace {

template <typename T>
Tensor<T> sigmoid_log_grad(const Tensor<T>& p, bool complement) {
  Tensor<T> g(p.shape());
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = p[i];
    g[i] = static_cast<T>(complement ? v / n : -(1.0 - v) / n);
  }
  return g;
}

}  // namespace

template <typename T>
ScoreGrads<T> dcgan_d_logit_grads(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  return {sigmoid_log_grad(d_real, false), sigmoid_log_grad(d_fake, true)};
}

template <typename T>
Tensor<T> dcgan_g_logit_grad(const Tensor<T>& d_fake) {
  return sigmoid_log_grad(d_fake, false);
}

template <typename T>
ScoreGrads<T> wgan_critic_loss_grads(const Tensor<T>& f_real, const Tensor<T>& f_fake) {
  return {constant_like(f_real, -1.0 / static_cast<double>(f_real.size())),
          constant_like(f_fake, 1.0 / static_cast<double>(f_fake.size()))};
}

template <typename T>
Tensor<T> wgan_g_loss_grad(const Tensor<T>& f_fake) {
  return constant_like(f_fake, -1.0 / static_cast<double>(f_fake.size()));
}

template <typename T>
void clip_weights(ParamSet<T>& params, double c, ClipOptions options) {
  require(c > 0.0, ErrorKind::InvalidArgument, "clip_weights: c must be positive");
  // Largest T not above c, so the bound holds exactly in double as well.
  T hi = static_cast<T>(c);
  if (static_cast<double>(hi) > c) hi = std::nextafter(hi, T(0));
  const T lo = -hi;
  for (auto& p : params.entries) {
    if (!clipped_role(p.role, options)) continue;
    for (auto& v : p.value.values()) v = std::clamp(v, lo, hi);
  }
}

template <typename T>
double max_clipped_magnitude(const ParamSet<T>& params, ClipOptions options) {
  double m = 0.0;
  for (const auto& p : params.entries)
    if (clipped_role(p.role, options)) m = std::max(m, max_abs(p.value));
  return m;
}

#define BOOLGAN_INSTANTIATE_LOSSES(T)                                                  \
  template double dcgan_d_loss<T>(const Tensor<T>&, const Tensor<T>&);                 \
  template double dcgan_g_loss<T>(const Tensor<T>&);                                   \
  template double wgan_critic_loss<T>(const Tensor<T>&, const Tensor<T>&);             \
  template double wgan_g_loss<T>(const Tensor<T>&);                                    \
  template ScoreGrads<T> dcgan_d_loss_grads<T>(const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> dcgan_g_loss_grad<T>(const Tensor<T>&);                           \
  template ScoreGrads<T> dcgan_d_logit_grads<T>(const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> dcgan_g_logit_grad<T>(const Tensor<T>&);                          \
  template ScoreGrads<T> wgan_critic_loss_grads<T>(const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> wgan_g_loss_grad<T>(const Tensor<T>&);                            \
  template void clip_weights<T>(ParamSet<T>&, double, ClipOptions);                    \
  template double max_clipped_magnitude<T>(const ParamSet<T>&, ClipOptions);

BOOLGAN_INSTANTIATE_LOSSES(float)
BOOLGAN_INSTANTIATE_LOSSES(double)

#undef BOOLGAN_INSTANTIATE_LOSSES

}  // namespace boolgan
