// SPDX-License-Identifier: Apache-2.0
#include "boolgan/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "boolgan/finite_diff.hpp"
#include "boolgan/models.hpp"

namespace boolgan {

namespace {

constexpr double kEps = 1e-6;
constexpr std::size_t kSamplesPerTensor = 6;
constexpr std::size_t kTinyWidth = 8;
constexpr std::size_t kTinyLatent = 4;

using Fn = std::function<double(const TensorD&)>;

double weighted_sum(const TensorD& y, const TensorD& r) { return dot(y, r); }

/// Inputs for piecewise-linear activations are kept away from the kink.
TensorD away_from_zero(TensorD x) {
  for (auto& v : x.values())
    if (std::abs(v) < 0.05) v = v < 0 ? v - 0.05 : v + 0.05;
  return x;
}

double check_full(const Fn& f, const TensorD& x, const TensorD& analytic) {
  return max_relative_error(analytic, finite_diff_grad(f, x, kEps));
}

GradcheckEntry conv_entry(bool inject) {
  RngStream rng(11, 1);
  const ConvGeometry g{3, 2, 1, 3, 4};
  const TensorD x = randn<double>({2, 3, 7, 7}, rng);
  const TensorD w = randn<double>(conv_weight_shape(g), rng);
  const TensorD b = randn<double>({4}, rng);
  const TensorD r = randn<double>(conv2d(x, w, b, g).shape(), rng);
  auto grads = conv2d_grads(x, w, g, r);
  if (inject) grads.dw[0] += 0.05 * (1.0 + std::abs(grads.dw[0]));
  double err = check_full([&](const TensorD& p) { return weighted_sum(conv2d(p, w, b, g), r); }, x, grads.dx);
  err = std::max(err, check_full([&](const TensorD& p) { return weighted_sum(conv2d(x, p, b, g), r); }, w, grads.dw));
  err = std::max(err, check_full([&](const TensorD& p) { return weighted_sum(conv2d(x, w, p, g), r); }, b, grads.db));
  return {"conv2d", err, false};
}

GradcheckEntry convtranspose_entry() {
  RngStream rng(11, 2);
  const ConvGeometry g{4, 2, 1, 3, 2};
  const TensorD x = randn<double>({2, 3, 4, 4}, rng);
  const TensorD w = randn<double>(convtranspose_weight_shape(g), rng);
  const TensorD b = randn<double>({2}, rng);
  const TensorD r = randn<double>(convtranspose2d(x, w, b, g).shape(), rng);
  const auto grads = convtranspose2d_grads(x, w, g, r);
  auto f = [&](const TensorD& xx, const TensorD& ww, const TensorD& bb) {
    return weighted_sum(convtranspose2d(xx, ww, bb, g), r);
  };
  double err = check_full([&](const TensorD& p) { return f(p, w, b); }, x, grads.dx);
  err = std::max(err, check_full([&](const TensorD& p) { return f(x, p, b); }, w, grads.dw));
  err = std::max(err, check_full([&](const TensorD& p) { return f(x, w, p); }, b, grads.db));
  return {"convtranspose2d", err, false};
}

GradcheckEntry batchnorm_entry() {
  RngStream rng(11, 3);
  auto state = make_batchnorm_state<double>(3);
  state.gamma = randn<double>({3}, rng, 1.0, 0.5);
  state.beta = randn<double>({3}, rng);
  const TensorD x = randn<double>({3, 3, 3, 3}, rng, 0.5, 2.0);
  const TensorD r = randn<double>(x.shape(), rng);
  const auto grads = batchnorm2d_grads(x, state, r);
  auto f = [&](const TensorD& xx, const TensorD& gamma, const TensorD& beta) {
    auto s = state;
    s.gamma = gamma;
    s.beta = beta;
    return weighted_sum(batchnorm2d(xx, s, Mode::Train).y, r);
  };
  double err = check_full([&](const TensorD& p) { return f(p, state.gamma, state.beta); }, x, grads.dx);
  err = std::max(err, check_full([&](const TensorD& p) { return f(x, p, state.beta); }, state.gamma, grads.dgamma));
  err = std::max(err, check_full([&](const TensorD& p) { return f(x, state.gamma, p); }, state.beta, grads.dbeta));
  return {"batchnorm2d", err, false};
}

GradcheckEntry dropout_entry() {
  RngStream rng(11, 4);
  const TensorD x = randn<double>({2, 3, 4, 4}, rng);
  const TensorD r = randn<double>(x.shape(), rng);
  const RngStream mask_rng(11, 40);
  RngStream first = mask_rng;
  const auto fwd = dropout(x, 0.3, Mode::Train, first);
  const TensorD dx = dropout_grad(r, fwd.mask);
  const double err = check_full(
      [&](const TensorD& p) {
        RngStream same = mask_rng;
        return weighted_sum(dropout(p, 0.3, Mode::Train, same).y, r);
      },
      x, dx);
  return {"dropout", err, false};
}

GradcheckEntry activation_entry(const char* name, ActivationKind kind) {
  RngStream rng(11, 5 + static_cast<std::uint64_t>(kind));
  const Activation act{kind, 0.2};
  const TensorD x = away_from_zero(randn<double>({2, 3, 4, 4}, rng, 0.0, 1.5));
  const TensorD r = randn<double>(x.shape(), rng);
  const TensorD dx = activation_grad(x, activation(x, act), r, act);
  const double err = check_full([&](const TensorD& p) { return weighted_sum(activation(p, act), r); }, x, dx);
  return {name, err, false};
}

/// Error of sampled entries of one tensor, perturbed in place.
struct SampledError {
  double diff = 0.0;
  double scale = 0.0;
};

SampledError sampled_check(TensorD& target, const TensorD& analytic, const std::function<double()>& eval,
                           RngStream& pick) {
  SampledError out;
  const std::size_t count = std::min(kSamplesPerTensor, target.size());
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t i = count == target.size() ? s : pick.next_below(target.size());
    const double original = target[i];
    target[i] = original + kEps;
    const double plus = eval();
    target[i] = original - kEps;
    const double minus = eval();
    target[i] = original;
    const double numeric = (plus - minus) / (2.0 * kEps);
    out.diff = std::max(out.diff, std::abs(analytic[i] - numeric));
    out.scale = std::max(out.scale, std::abs(numeric));
  }
  return out;
}

GradcheckEntry model_entry(const char* name, const ModelSpec& spec, std::uint64_t stream) {
  RngStream rng(13, stream);
  ParamSet<double> params = init_params<double>(spec, rng);
  // Spread the weights so every layer contributes visibly.
  for (auto& p : params.entries)
    if (p.role == ParamRole::Weight) p.value = randn<double>(p.value.shape(), rng, 0.0, 0.3);
    else if (p.role == ParamRole::Bias || p.role == ParamRole::Beta) p.value = randn<double>(p.value.shape(), rng, 0.0, 0.1);

  Shape in_shape = spec.input;
  in_shape.insert(in_shape.begin(), 2);
  TensorD x = randn<double>(in_shape, rng, 0.0, 0.5);
  const RngStream dropout_rng(13, stream + 100);
  RngStream first = dropout_rng;
  const auto fwd = forward(spec, params, x, Mode::Train, first);
  const TensorD r = randn<double>(fwd.y.shape(), rng);
  const auto bwd = backward(spec, params, fwd.cache, r);

  auto eval = [&] {
    RngStream same = dropout_rng;
    return weighted_sum(forward(spec, params, x, Mode::Train, same).y, r);
  };
  RngStream pick(13, stream + 200);
  std::vector<SampledError> errors;
  errors.push_back(sampled_check(x, bwd.dx, eval, pick));
  for (std::size_t i = 0; i < params.entries.size(); ++i) {
    if (!is_trainable(params.entries[i].role)) continue;
    errors.push_back(sampled_check(params.entries[i].value, bwd.grads.entries[i].value, eval, pick));
  }
  // Conv biases feeding BatchNorm have an exactly zero gradient; measure
  // those against a small fraction of the network's gradient scale.
  double global = 0.0;
  for (const auto& e : errors) global = std::max(global, e.scale);
  double err = 0.0;
  for (const auto& e : errors) err = std::max(err, e.diff / std::max(e.scale, 1e-3 * global));
  return {name, err, false};
}

}  // namespace

const std::vector<std::string_view>& gradcheck_scopes() {
  static const std::vector<std::string_view> scopes = {
      "conv2d", "convtranspose2d", "batchnorm2d",     "dropout",           "relu",          "leaky_relu",
      "tanh",   "sigmoid",         "dcgan_generator", "boolgan_generator", "discriminator", "critic"};
  return scopes;
}

std::vector<GradcheckEntry> run_gradcheck(const GradcheckOptions& options) {
  const auto& scopes = gradcheck_scopes();
  if (options.scope != "all" &&
      std::find(scopes.begin(), scopes.end(), options.scope) == scopes.end())
    fail(ErrorKind::InvalidArgument, "unknown gradcheck scope '" + options.scope + "'");
  if (!options.inject_fault.empty() && options.inject_fault != "conv2d")
    fail(ErrorKind::InvalidArgument, "fault injection supports only conv2d");

  std::vector<GradcheckEntry> out;
  for (std::string_view s : scopes) {
    if (options.scope != "all" && options.scope != s) continue;
    GradcheckEntry e;
    if (s == "conv2d") e = conv_entry(options.inject_fault == "conv2d");
    else if (s == "convtranspose2d") e = convtranspose_entry();
    else if (s == "batchnorm2d") e = batchnorm_entry();
    else if (s == "dropout") e = dropout_entry();
    else if (s == "relu") e = activation_entry("relu", ActivationKind::Relu);
    else if (s == "leaky_relu") e = activation_entry("leaky_relu", ActivationKind::LeakyRelu);
    else if (s == "tanh") e = activation_entry("tanh", ActivationKind::Tanh);
    else if (s == "sigmoid") e = activation_entry("sigmoid", ActivationKind::Sigmoid);
    else if (s == "dcgan_generator")
      e = model_entry("dcgan_generator", build_dcgan_generator(kTinyLatent, kTinyWidth), 1);
    else if (s == "boolgan_generator")
      e = model_entry("boolgan_generator", build_boolgan_generator(kTinyLatent, kTinyWidth), 2);
    else if (s == "discriminator")
      e = model_entry("discriminator", build_discriminator(false, 0.0, kTinyWidth), 3);
    else
      e = model_entry("critic", build_discriminator(true, 0.2, kTinyWidth), 4);
    e.passed = std::isfinite(e.max_rel_error) && e.max_rel_error <= options.tolerance;
    out.push_back(e);
  }
  return out;
}

}  // namespace boolgan
