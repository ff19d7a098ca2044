// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>

#include "boolgan/finite_diff.hpp"
#include "boolgan/losses.hpp"
#include "boolgan/optim.hpp"

using namespace boolgan;

namespace {

TensorD vec(std::initializer_list<double> v) { return TensorD({v.size()}, std::vector<double>(v)); }

ParamSet<double> single_param(double value) {
  ParamSet<double> p;
  p.entries.push_back({"layer0.weight", 0, ParamRole::Weight, TensorD({1}, value)});
  return p;
}

}  // namespace

TEST_CASE("dcgan discriminator loss") {
  CHECK(dcgan_d_loss(vec({1.0}), vec({0.0})) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(dcgan_d_loss(vec({0.5}), vec({0.5})) - 2.0 * std::log(2.0)) <= 1e-9);
  const double boundary = dcgan_d_loss(vec({0.0}), vec({1.0}));
  CHECK(std::isfinite(boundary));
  CHECK(std::abs(boundary + 2.0 * std::log(kProbabilityClamp)) <= 1e-6);
  CHECK(boundary == doctest::Approx(32.236).epsilon(1e-4));
}

TEST_CASE("dcgan generator loss") {
  CHECK(dcgan_g_loss(vec({1.0})) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(dcgan_g_loss(vec({0.5})) - std::log(2.0)) <= 1e-9);
  CHECK(std::abs(dcgan_g_loss(vec({0.25, 0.25})) - std::log(4.0)) <= 1e-9);
}

TEST_CASE("wgan losses") {
  CHECK(wgan_critic_loss(vec({0.3, -1.0}), vec({0.3, -1.0})) == 0.0);
  CHECK(std::abs(wgan_critic_loss(vec({1.0, 3.0}), vec({0.5, 1.5})) + 1.0) <= 1e-12);
  const auto fr = vec({0.2, -0.7, 1.1}), ff = vec({0.4, 0.9});
  auto shifted = [](TensorD t, double k) {
    for (auto& v : t.values()) v += k;
    return t;
  };
  CHECK(std::abs(wgan_critic_loss(shifted(fr, 3.5), shifted(ff, 3.5)) - wgan_critic_loss(fr, ff)) <= 1e-12);
  CHECK(wgan_g_loss(TensorD({4})) == 0.0);
  CHECK(std::abs(wgan_g_loss(vec({1.0, 3.0})) + 2.0) <= 1e-12);
  auto scaled = ff;
  for (auto& v : scaled.values()) v *= 2.5;
  CHECK(std::abs(wgan_g_loss(scaled) - 2.5 * wgan_g_loss(ff)) <= 1e-12);

  // The gradient is constant in the scores, so scaling them changes nothing.
  const auto g1 = wgan_critic_loss_grads(fr, ff);
  const auto g2 = wgan_critic_loss_grads(fr, scaled);
  CHECK(g1.fake == g2.fake);
  CHECK(g1.real == g2.real);
}

TEST_CASE("loss gradients match finite differences") {
  RngStream r(1, 0);
  TensorD pr({6}), pf({6});
  for (std::size_t i = 0; i < 6; ++i) {
    pr[i] = 0.05 + 0.9 * r.next_uniform();
    pf[i] = 0.05 + 0.9 * r.next_uniform();
  }
  const auto dg = dcgan_d_loss_grads(pr, pf);
  CHECK(max_relative_error(dg.real, finite_diff_grad([&](const TensorD& p) { return dcgan_d_loss(p, pf); }, pr, 1e-7)) <= 1e-6);
  CHECK(max_relative_error(dg.fake, finite_diff_grad([&](const TensorD& p) { return dcgan_d_loss(pr, p); }, pf, 1e-7)) <= 1e-6);
  CHECK(max_relative_error(dcgan_g_loss_grad(pf), finite_diff_grad([](const TensorD& p) { return dcgan_g_loss(p); }, pf, 1e-7)) <= 1e-6);

  const TensorD fr = randn<double>({5}, r), ff = randn<double>({7}, r);
  const auto wg = wgan_critic_loss_grads(fr, ff);
  CHECK(max_relative_error(wg.real, finite_diff_grad([&](const TensorD& p) { return wgan_critic_loss(p, ff); }, fr, 1e-6)) <= 1e-6);
  CHECK(max_relative_error(wg.fake, finite_diff_grad([&](const TensorD& p) { return wgan_critic_loss(fr, p); }, ff, 1e-6)) <= 1e-6);
  CHECK(max_relative_error(wgan_g_loss_grad(ff), finite_diff_grad([](const TensorD& p) { return wgan_g_loss(p); }, ff, 1e-6)) <= 1e-6);
}

TEST_CASE("logit-space gradients are the chain rule through the sigmoid") {
  RngStream r(2, 0);
  const TensorD lr = randn<double>({5}, r, 0.0, 2.0), lf = randn<double>({5}, r, 0.0, 2.0);
  auto sig = [](const TensorD& l) {
    TensorD p(l.shape());
    for (std::size_t i = 0; i < l.size(); ++i) p[i] = 1.0 / (1.0 + std::exp(-l[i]));
    return p;
  };
  const auto g = dcgan_d_logit_grads(sig(lr), sig(lf));
  CHECK(max_relative_error(g.real, finite_diff_grad([&](const TensorD& p) { return dcgan_d_loss(sig(p), sig(lf)); }, lr, 1e-6)) <= 1e-6);
  CHECK(max_relative_error(g.fake, finite_diff_grad([&](const TensorD& p) { return dcgan_d_loss(sig(lr), sig(p)); }, lf, 1e-6)) <= 1e-6);
  CHECK(max_relative_error(dcgan_g_logit_grad(sig(lf)), finite_diff_grad([&](const TensorD& p) { return dcgan_g_loss(sig(p)); }, lf, 1e-6)) <= 1e-6);

  // A confidently rejected fake still receives a full-strength gradient.
  const auto saturated = dcgan_g_logit_grad(vec({0.0}));
  CHECK(saturated[0] == -1.0);
  CHECK(dcgan_g_loss_grad(vec({0.0}))[0] == 0.0);
}

TEST_CASE("clip_weights") {
  ParamSet<double> p;
  p.entries.push_back({"layer0.weight", 0, ParamRole::Weight, vec({0.05, 0.5, -0.5})});
  p.entries.push_back({"layer1.gamma", 1, ParamRole::Gamma, vec({1.0})});
  p.entries.push_back({"layer1.running_var", 1, ParamRole::RunningVar, vec({4.0})});
  auto q = p;
  clip_weights(p, 0.1);
  CHECK(p.entries[0].value == vec({0.05, 0.1, -0.1}));
  CHECK(p.entries[1].value[0] == 0.1);
  CHECK(p.entries[2].value[0] == 4.0);
  CHECK(max_clipped_magnitude(p) <= 0.1);
  clip_weights(q, 0.1, ClipOptions{false});
  CHECK(q.entries[1].value[0] == 1.0);
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto p = single_param(0.3);
    auto st = make_opt_state(p, OptimizerKind::Adam);
    adam_step(p, p.zeros_like(), st, 2e-4, 0.5, 0.999);
    CHECK(p.entries[0].value[0] == 0.3);
    CHECK(st.step == 1);
  }
  SUBCASE("bias-corrected first step moves by lr") {
    auto p = single_param(0.0);
    auto g = single_param(1.0);
    auto st = make_opt_state(p, OptimizerKind::Adam);
    adam_step(p, g, st, 1e-3, 0.5, 0.999, 0.0);
    CHECK(p.entries[0].value[0] == doctest::Approx(-1e-3).epsilon(1e-12));
  }
  SUBCASE("non-finite gradient is rejected without touching parameters") {
    auto p = single_param(0.2);
    auto g = single_param(std::numeric_limits<double>::infinity());
    auto st = make_opt_state(p, OptimizerKind::Adam);
    CHECK_THROWS_AS(adam_step(p, g, st, 1e-3, 0.5, 0.999), Error);
    CHECK(p.entries[0].value[0] == 0.2);
  }
  SUBCASE("finite inputs give finite parameters") {
    RngStream r(3, 0);
    auto p = single_param(0.0);
    auto st = make_opt_state(p, OptimizerKind::Adam);
    for (int i = 0; i < 200; ++i) adam_step(p, single_param(1e6 * r.next_normal()), st, 1e-2, 0.5, 0.999);
    CHECK(std::isfinite(p.entries[0].value[0]));
  }
  SUBCASE("state for the other optimizer is refused") {
    auto p = single_param(0.0);
    auto st = make_opt_state(p, OptimizerKind::RmsProp);
    CHECK_THROWS_AS(adam_step(p, p, st, 1e-3, 0.5, 0.999), Error);
  }
}

TEST_CASE("rmsprop") {
  SUBCASE("zero gradient") {
    auto p = single_param(0.3);
    auto st = make_opt_state(p, OptimizerKind::RmsProp);
    rmsprop_step(p, p.zeros_like(), st, 5e-5, 0.99);
    CHECK(p.entries[0].value[0] == 0.3);
  }
  SUBCASE("analytic first step") {
    auto p = single_param(0.0);
    auto st = make_opt_state(p, OptimizerKind::RmsProp);
    rmsprop_step(p, single_param(1.0), st, 5e-5, 0.99, 1e-8);
    CHECK(st.second[0][0] == doctest::Approx(0.01));
    CHECK(p.entries[0].value[0] == doctest::Approx(-5e-4).epsilon(1e-6));
  }
  SUBCASE("bitwise deterministic") {
    auto p1 = single_param(0.1), p2 = single_param(0.1);
    auto s1 = make_opt_state(p1, OptimizerKind::RmsProp), s2 = make_opt_state(p2, OptimizerKind::RmsProp);
    rmsprop_step(p1, single_param(0.37), s1, 5e-5, 0.99);
    rmsprop_step(p2, single_param(0.37), s2, 5e-5, 0.99);
    CHECK(p1.entries[0].value == p2.entries[0].value);
  }
}
