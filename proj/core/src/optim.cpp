// SPDX-License-Identifier: Apache-2.0
#include "boolgan/optim.hpp"

#include <cmath>

namespace boolgan {

namespace {

template <typename T>
void check_alignment(const ParamSet<T>& params, const ParamSet<T>& grads, const OptState<T>& st) {
  require(grads.entries.size() == params.entries.size() &&
              st.first.size() == params.entries.size() &&
              st.second.size() == params.entries.size(),
          ErrorKind::ShapeMismatch, "optimizer: params, grads and state are not aligned");
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    const auto& p = params.entries[i];
    if (!is_trainable(p.role)) continue;
    require_shape(grads.entries[i].value, p.value.shape(), "gradient of " + p.name);
    check_finite(grads.entries[i].value, "gradient of " + p.name);
  }
}

}  // namespace

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::Adam ? "adam" : "rmsprop";
}

template <typename T>
OptState<T> make_opt_state(const ParamSet<T>& params, OptimizerKind kind) {
  OptState<T> st;
  st.kind = kind;
  for (const auto& p : params.entries) {
    const bool train = is_trainable(p.role);
    st.first.push_back(train && kind == OptimizerKind::Adam ? Tensor<T>(p.value.shape())
                                                            : Tensor<T>());
    st.second.push_back(train ? Tensor<T>(p.value.shape()) : Tensor<T>());
  }
  return st;
}

template <typename T>
void adam_step(ParamSet<T>& params, const ParamSet<T>& grads, OptState<T>& st, double lr,
               double beta1, double beta2, double eps) {
  require(st.kind == OptimizerKind::Adam, ErrorKind::InvalidArgument,
          "adam_step: optimizer state was built for rmsprop");
  check_alignment(params, grads, st);
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    auto& p = params.entries[i];
    if (!is_trainable(p.role)) continue;
    const auto& g = grads.entries[i].value;
    auto& m = st.first[i];
    auto& v = st.second[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double gk = g[k];
      const double mk = beta1 * m[k] + (1.0 - beta1) * gk;
      const double vk = beta2 * v[k] + (1.0 - beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double m_hat = mk / c1;
      const double v_hat = vk / c2;
      p.value[k] = static_cast<T>(p.value[k] - lr * m_hat / (std::sqrt(v_hat) + eps));
    }
  }
}

template <typename T>
void rmsprop_step(ParamSet<T>& params, const ParamSet<T>& grads, OptState<T>& st, double lr,
                  double rho, double eps) {
  require(st.kind == OptimizerKind::RmsProp, ErrorKind::InvalidArgument,
          "rmsprop_step: optimizer state was built for adam");
  check_alignment(params, grads, st);
  ++st.step;
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    auto& p = params.entries[i];
    if (!is_trainable(p.role)) continue;
    const auto& g = grads.entries[i].value;
    auto& v = st.second[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double gk = g[k];
      const double vk = rho * v[k] + (1.0 - rho) * gk * gk;
      v[k] = static_cast<T>(vk);
      p.value[k] = static_cast<T>(p.value[k] - lr * gk / (std::sqrt(vk) + eps));
    }
  }
}

template OptState<float> make_opt_state<float>(const ParamSet<float>&, OptimizerKind);
template OptState<double> make_opt_state<double>(const ParamSet<double>&, OptimizerKind);
template void adam_step<float>(ParamSet<float>&, const ParamSet<float>&, OptState<float>&, double,
                               double, double, double);
template void adam_step<double>(ParamSet<double>&, const ParamSet<double>&, OptState<double>&,
                                double, double, double, double);
template void rmsprop_step<float>(ParamSet<float>&, const ParamSet<float>&, OptState<float>&,
                                  double, double, double);
template void rmsprop_step<double>(ParamSet<double>&, const ParamSet<double>&, OptState<double>&,
                                   double, double, double);

}  // namespace boolgan
