// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "boolgan/finite_diff.hpp"
#include "boolgan/layers.hpp"
#include "support.hpp"

using namespace boolgan;
using test::max_abs_diff;

namespace {

/// A geometry with N,C,F <= 3, H,W <= 8, k in {1,3,4}, s in {1,2}, p in {0,1}
/// whose output extent divides exactly.
struct RandomCase {
  ConvGeometry geom;
  std::size_t n, h, w;
};

RandomCase random_case(RngStream& r) {
  static const std::size_t kernels[] = {1, 3, 4};
  while (true) {
    RandomCase c;
    c.geom.kernel = kernels[r.next_below(3)];
    c.geom.stride = 1 + r.next_below(2);
    c.geom.padding = r.next_below(2);
    c.geom.in_channels = 1 + r.next_below(3);
    c.geom.out_channels = 1 + r.next_below(3);
    c.n = 1 + r.next_below(3);
    c.h = 1 + r.next_below(8);
    c.w = 1 + r.next_below(8);
    const auto& g = c.geom;
    if (c.h + 2 * g.padding < g.kernel || c.w + 2 * g.padding < g.kernel) continue;
    if ((c.h + 2 * g.padding - g.kernel) % g.stride || (c.w + 2 * g.padding - g.kernel) % g.stride) continue;
    return c;
  }
}

}  // namespace

TEST_CASE("conv2d identity 1x1 kernel") {
  RngStream r(1, 0);
  const ConvGeometry g{1, 1, 0, 2, 2};
  const TensorD x = randn<double>({2, 2, 3, 3}, r);
  TensorD w(conv_weight_shape(g));
  w.at(0, 0, 0, 0) = 1.0;
  w.at(1, 1, 0, 0) = 1.0;
  CHECK(conv2d(x, w, TensorD({2}), g) == x);
}

TEST_CASE("conv2d of ones sums the window") {
  const ConvGeometry g{2, 1, 0, 1, 1};
  const auto y = conv2d(TensorD({1, 1, 3, 3}, 1.0), TensorD({1, 1, 2, 2}, 1.0), TensorD({1}), g);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  for (double v : y.values()) CHECK(v == 4.0);
}

TEST_CASE("conv2d and convtranspose2d match direct loops; adjoint identity holds") {
  RngStream r(2, 0);
  for (int trial = 0; trial < 120; ++trial) {
    const RandomCase c = random_case(r);
    const auto& g = c.geom;
    const TensorD x = randn<double>({c.n, g.in_channels, c.h, c.w}, r);
    const TensorD w = randn<double>(conv_weight_shape(g), r);
    const TensorD b = randn<double>({g.out_channels}, r);
    const TensorD y = conv2d(x, w, b, g);
    CHECK(max_abs_diff(y, test::naive_conv2d(x, w, b, g)) <= 1e-10);

    // convT maps conv's output space back to its input space with the same weight.
    const ConvGeometry gt{g.kernel, g.stride, g.padding, g.out_channels, g.in_channels};
    const TensorD u = randn<double>(y.shape(), r);
    const TensorD zeros_c({g.in_channels});
    const TensorD zeros_f({g.out_channels});
    const TensorD ct = convtranspose2d(u, w, zeros_c, gt);
    CHECK(ct.shape() == x.shape());
    CHECK(max_abs_diff(ct, test::naive_convtranspose2d(u, w, zeros_c, gt)) <= 1e-10);
    const double lhs = dot(ct, x);
    const double rhs = dot(u, conv2d(x, w, zeros_f, g));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("conv2d_grads: zero cotangent, bias sum, finite differences") {
  RngStream r(3, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const RandomCase c = random_case(r);
    const auto& g = c.geom;
    const TensorD x = randn<double>({c.n, g.in_channels, c.h, c.w}, r);
    const TensorD w = randn<double>(conv_weight_shape(g), r);
    const TensorD b = randn<double>({g.out_channels}, r);
    const Shape ys = conv2d(x, w, b, g).shape();

    const auto zero = conv2d_grads(x, w, g, TensorD(ys));
    CHECK(max_abs(zero.dx) == 0.0);
    CHECK(max_abs(zero.dw) == 0.0);
    CHECK(max_abs(zero.db) == 0.0);

    const TensorD dy = randn<double>(ys, r);
    const auto gr = conv2d_grads(x, w, g, dy);
    for (std::size_t f = 0; f < g.out_channels; ++f) {
      double s = 0.0;
      for (std::size_t n = 0; n < ys[0]; ++n)
        for (std::size_t i = 0; i < ys[2] * ys[3]; ++i) s += dy[(n * ys[1] + f) * ys[2] * ys[3] + i];
      CHECK(gr.db[f] == doctest::Approx(s).epsilon(1e-12));
    }
    auto loss_x = [&](const TensorD& p) { return dot(conv2d(p, w, b, g), dy); };
    auto loss_w = [&](const TensorD& p) { return dot(conv2d(x, p, b, g), dy); };
    CHECK(max_relative_error(gr.dx, finite_diff_grad(loss_x, x, 1e-6)) <= 1e-5);
    CHECK(max_relative_error(gr.dw, finite_diff_grad(loss_w, w, 1e-6)) <= 1e-5);
  }
}

TEST_CASE("convtranspose2d examples") {
  SUBCASE("single pixel reproduces the kernel") {
    const ConvGeometry g{3, 1, 0, 1, 2};
    RngStream r(4, 0);
    const TensorD w = randn<double>(convtranspose_weight_shape(g), r);
    TensorD x({1, 1, 1, 1});
    x[0] = 2.5;
    const auto y = convtranspose2d(x, w, TensorD({2}), g);
    REQUIRE(y.shape() == Shape{1, 2, 3, 3});
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(2.5 * w[i]));
  }
  SUBCASE("4x4 input, k4 s2 p1 gives 8x8") {
    const ConvGeometry g{4, 2, 1, 2, 3};
    const auto y = convtranspose2d(TensorD({1, 2, 4, 4}), TensorD(convtranspose_weight_shape(g)), TensorD({3}), g);
    CHECK(y.shape() == Shape{1, 3, 8, 8});
  }
}

TEST_CASE("convtranspose2d_grads: zero cotangent, adjointness, finite differences") {
  RngStream r(5, 0);
  for (int trial = 0; trial < 12; ++trial) {
    const RandomCase c = random_case(r);
    const auto& g = c.geom;
    const std::size_t oh = conv_output_extent(c.h, g), ow = conv_output_extent(c.w, g);
    // Transposed layer from F channels at (oh, ow) back to C channels at (h, w).
    const ConvGeometry gt{g.kernel, g.stride, g.padding, g.out_channels, g.in_channels};
    const TensorD x = randn<double>({c.n, g.out_channels, oh, ow}, r);
    const TensorD w = randn<double>(convtranspose_weight_shape(gt), r);
    const TensorD b = randn<double>({g.in_channels}, r);
    const Shape ys = convtranspose2d(x, w, b, gt).shape();

    const auto zero = convtranspose2d_grads(x, w, gt, TensorD(ys));
    CHECK(max_abs(zero.dx) + max_abs(zero.dw) + max_abs(zero.db) == 0.0);

    const TensorD dy = randn<double>(ys, r);
    const auto gr = convtranspose2d_grads(x, w, gt, dy);
    CHECK(max_abs_diff(gr.dx, conv2d(dy, w, TensorD({g.out_channels}), g)) <= 1e-10);
    auto loss_x = [&](const TensorD& p) { return dot(convtranspose2d(p, w, b, gt), dy); };
    auto loss_w = [&](const TensorD& p) { return dot(convtranspose2d(x, p, b, gt), dy); };
    auto loss_b = [&](const TensorD& p) { return dot(convtranspose2d(x, w, p, gt), dy); };
    CHECK(max_relative_error(gr.dx, finite_diff_grad(loss_x, x, 1e-6)) <= 1e-5);
    CHECK(max_relative_error(gr.dw, finite_diff_grad(loss_w, w, 1e-6)) <= 1e-5);
    CHECK(max_relative_error(gr.db, finite_diff_grad(loss_b, b, 1e-6)) <= 1e-5);
  }
}

TEST_CASE("float and double convolutions agree") {
  RngStream r(6, 0);
  const ConvGeometry g{4, 2, 1, 5, 7};
  const TensorD x = randn<double>({3, 5, 16, 16}, r);
  const TensorD w = randn<double>(conv_weight_shape(g), r);
  const TensorD b = randn<double>({7}, r);
  const auto yd = conv2d(x, w, b, g);
  const auto yf = conv2d(x.cast<float>(), w.cast<float>(), b.cast<float>(), g);
  CHECK(max_abs_diff(yd, yf.cast<double>()) <= 1e-4 * max_abs(yd));
}

TEST_CASE("geometry validation") {
  CHECK(conv_output_extent(64, ConvGeometry{4, 2, 1, 3, 8}) == 32);
  CHECK(convtranspose_output_extent(4, ConvGeometry{4, 2, 1, 8, 3}) == 8);
  CHECK_THROWS_AS(conv_output_extent(5, ConvGeometry{4, 2, 1, 1, 1}), Error);
  CHECK_THROWS_AS(conv_output_extent(2, ConvGeometry{5, 1, 0, 1, 1}), Error);
  const ConvGeometry g{3, 1, 1, 2, 2};
  CHECK_THROWS_AS(conv2d(TensorD({1, 3, 4, 4}), TensorD(conv_weight_shape(g)), TensorD({2}), g), Error);
}

TEST_CASE("batchnorm2d examples") {
  SUBCASE("constant channel maps to beta") {
    auto st = make_batchnorm_state<double>(2);
    st.beta[0] = 0.7;
    st.beta[1] = -1.3;
    TensorD x({2, 2, 3, 3});
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
          x.at(n, 0, i, j) = 4.0;
          x.at(n, 1, i, j) = -2.0;
        }
    const auto y = batchnorm2d(x, st, Mode::Train).y;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 9; ++i) {
        CHECK(y[(n * 2 + 0) * 9 + i] == doctest::Approx(0.7));
        CHECK(y[(n * 2 + 1) * 9 + i] == doctest::Approx(-1.3));
      }
  }
  SUBCASE("train mode standardizes each channel") {
    RngStream r(7, 0);
    const TensorD x = randn<double>({4, 3, 5, 5}, r, 2.0, 3.0);
    const auto y = batchnorm2d(x, make_batchnorm_state<double>(3), Mode::Train).y;
    for (std::size_t c = 0; c < 3; ++c) {
      double m = 0, v = 0;
      const std::size_t count = 4 * 25;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) m += y[(n * 3 + c) * 25 + i];
      m /= count;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t i = 0; i < 25; ++i) v += std::pow(y[(n * 3 + c) * 25 + i] - m, 2);
      v /= count;
      CHECK(std::abs(m) <= 1e-6);
      CHECK(std::abs(v - 1.0) <= 1e-6 + 1e-5);
    }
  }
  SUBCASE("eval mode analytic value") {
    auto st = make_batchnorm_state<double>(1);
    st.running_mean[0] = 1.0;
    st.running_var[0] = 4.0;
    st.gamma[0] = 2.0;
    st.beta[0] = 3.0;
    st.eps = 0.0;
    const auto y = batchnorm2d(TensorD({1, 1, 1, 1}, 5.0), st, Mode::Eval).y;
    CHECK(y[0] == doctest::Approx(7.0));
  }
  SUBCASE("train mode updates running statistics") {
    RngStream r(8, 0);
    const TensorD x = randn<double>({4, 1, 3, 3}, r, 2.0, 1.0);
    const auto st = make_batchnorm_state<double>(1);
    const auto out = batchnorm2d(x, st, Mode::Train).state;
    const double mean = sum(x) / 36.0;
    double var = 0;
    for (double v : x.values()) var += (v - mean) * (v - mean);
    var /= 35.0;
    CHECK(out.running_mean[0] == doctest::Approx(0.1 * mean));
    CHECK(out.running_var[0] == doctest::Approx(0.9 + 0.1 * var));
  }
}

TEST_CASE("eval-mode batchnorm is per-sample") {
  RngStream r(9, 0);
  auto st = make_batchnorm_state<double>(2);
  st.running_mean = randn<double>({2}, r);
  st.running_var = TensorD({2}, 1.7);
  const TensorD x = randn<double>({3, 2, 2, 2}, r);
  const auto all = batchnorm2d(x, st, Mode::Eval).y;
  TensorD first({1, 2, 2, 2});
  std::copy_n(x.data(), 8, first.data());
  const auto one = batchnorm2d(first, st, Mode::Eval).y;
  for (std::size_t i = 0; i < 8; ++i) CHECK(one[i] == all[i]);
}

TEST_CASE("batchnorm2d_grads") {
  RngStream r(10, 0);
  auto st = make_batchnorm_state<double>(3);
  st.gamma = randn<double>({3}, r, 1.0, 0.3);
  st.beta = randn<double>({3}, r);
  const TensorD x = randn<double>({3, 3, 3, 3}, r);
  const auto zero = batchnorm2d_grads(x, st, TensorD(x.shape()));
  CHECK(max_abs(zero.dx) + max_abs(zero.dgamma) + max_abs(zero.dbeta) == 0.0);

  const TensorD dy = randn<double>(x.shape(), r);
  const auto gr = batchnorm2d_grads(x, st, dy);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0;
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t i = 0; i < 9; ++i) s += dy[(n * 3 + c) * 9 + i];
    CHECK(gr.dbeta[c] == doctest::Approx(s));
  }
  auto loss = [&](const TensorD& p) { return dot(batchnorm2d(p, st, Mode::Train).y, dy); };
  CHECK(max_relative_error(gr.dx, finite_diff_grad(loss, x, 1e-6)) <= 1e-4);
}

TEST_CASE("dropout") {
  RngStream r(11, 0);
  const TensorD x = randn<double>({2, 3, 4, 4}, r);
  SUBCASE("p = 0 is the identity with an all-ones mask") {
    const auto d = dropout(x, 0.0, Mode::Train, r);
    CHECK(d.y == x);
    for (double m : d.mask.values()) CHECK(m == 1.0);
  }
  SUBCASE("eval mode is the identity") {
    CHECK(dropout(x, 0.5, Mode::Eval, r).y == x);
  }
  SUBCASE("inverted dropout keeps the expectation") {
    const auto d = dropout(TensorD({10000}, 1.0), 0.2, Mode::Train, r);
    std::size_t kept = 0;
    for (double m : d.mask.values()) kept += m != 0.0;
    CHECK(std::abs(sum(d.y) / 10000.0 - 1.0) <= 0.05);
    CHECK(std::abs(kept / 10000.0 - 0.8) <= 0.02);
    for (double m : d.mask.values()) CHECK((m == 0.0 || m == doctest::Approx(1.25)));
  }
  SUBCASE("gradient applies the mask") {
    const auto d = dropout(x, 0.3, Mode::Train, r);
    const TensorD dy = randn<double>(x.shape(), r);
    const auto dx = dropout_grad(dy, d.mask);
    for (std::size_t i = 0; i < dx.size(); ++i) CHECK(dx[i] == dy[i] * d.mask[i]);
  }
  CHECK_THROWS_AS(dropout(x, 1.0, Mode::Train, r), Error);
}

TEST_CASE("activation values") {
  auto one = [](ActivationKind k, double v) {
    return activation(TensorD({1}, v), Activation{k, 0.2})[0];
  };
  CHECK(one(ActivationKind::Relu, -1.0) == 0.0);
  CHECK(one(ActivationKind::Relu, 2.0) == 2.0);
  CHECK(one(ActivationKind::LeakyRelu, -1.0) == doctest::Approx(-0.2));
  CHECK(one(ActivationKind::Sigmoid, 0.0) == 0.5);
  CHECK(one(ActivationKind::Tanh, 0.0) == 0.0);
  CHECK(one(ActivationKind::Sigmoid, -800.0) >= 0.0);
  CHECK(one(ActivationKind::Sigmoid, 800.0) <= 1.0);
}

TEST_CASE("activation gradients match finite differences") {
  RngStream r(12, 0);
  for (auto k : {ActivationKind::Relu, ActivationKind::LeakyRelu, ActivationKind::Tanh, ActivationKind::Sigmoid}) {
    TensorD x = randn<double>({40}, r, 0.0, 2.0);
    for (auto& v : x.values())
      if (std::abs(v) < 0.05) v += 0.1;
    const TensorD dy = randn<double>({40}, r);
    const Activation act{k, 0.2};
    const auto dx = activation_grad(x, activation(x, act), dy, act);
    auto loss = [&](const TensorD& p) { return dot(activation(p, act), dy); };
    CHECK(max_relative_error(dx, finite_diff_grad(loss, x, 1e-6)) <= 1e-6);
  }
}
