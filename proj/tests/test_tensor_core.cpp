// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "boolgan/checkpoint.hpp"
#include "boolgan/finite_diff.hpp"
#include "boolgan/rng.hpp"
#include "support.hpp"

using namespace boolgan;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using B = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("rng streams are reproducible and independent") {
  RngStream a(7, 0), b(7, 0), c(7, 1);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.counter() == 1);
  CHECK(a.next_u64() != c.next_u64());
  RngStream d(7, 0, 1);
  RngStream e(7, 0);
  e.next_block();
  CHECK(d.next_u64() == e.next_u64());
  CHECK(a.derive(3) == b.derive(3));
  CHECK(a.derive(3) != a.derive(4));
}

TEST_CASE("next_uniform stays in the open unit interval and next_below in range") {
  RngStream r(1, 2);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.next_uniform();
    CHECK((u > 0.0 && u < 1.0));
    CHECK(r.next_below(7) < 7u);
  }
}

TEST_CASE("randn determinism") {
  RngStream a(7, 0), b(7, 0);
  const auto x = randn<float>({4}, a);
  const auto y = randn<float>({4}, b);
  CHECK(x == y);
}

TEST_CASE("randn moments") {
  RngStream r(1, 0);
  const auto x = randn<double>({100000}, r);
  double mean = sum(x) / x.size(), var = 0.0;
  for (double v : x.values()) var += (v - mean) * (v - mean);
  var /= x.size() - 1;
  CHECK(std::abs(mean) <= 0.02);
  CHECK(std::abs(var - 1.0) <= 0.03);
}

TEST_CASE("randn of an empty shape draws nothing") {
  RngStream r(3, 0);
  const auto x = randn<double>({0}, r);
  CHECK(x.size() == 0);
  CHECK(r.counter() == 0);
}

TEST_CASE("randn in chunks equals one draw") {
  RngStream a(5, 9), b(5, 9);
  const auto whole = randn<float>({10}, a);
  const auto first = randn<float>({4}, b);
  const auto second = randn<float>({6}, b);
  for (std::size_t i = 0; i < 4; ++i) CHECK(whole[i] == first[i]);
  for (std::size_t i = 0; i < 6; ++i) CHECK(whole[4 + i] == second[i]);
}

TEST_CASE("tensor basics") {
  TensorD t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(sum(t) == doctest::Approx(9.0));
  CHECK_THROWS_AS(t.reshaped({4}), Error);
  CHECK(t.reshaped({3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(TensorD({2}, std::vector<double>{1, 2, 3}), Error);
  TensorD bad({1}, std::numeric_limits<double>::quiet_NaN());
  CHECK_FALSE(all_finite(bad));
  try {
    check_finite(bad, "probe");
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFinite);
  }
}

TEST_CASE("finite_diff_grad examples") {
  auto sumsq = [](const TensorD& x) { return dot(x, x); };
  const auto g1 = finite_diff_grad(sumsq, TensorD({2}, {1.0, 2.0}), 1e-5);
  CHECK(std::abs(g1[0] - 2.0) <= 1e-6);
  CHECK(std::abs(g1[1] - 4.0) <= 1e-6);

  const TensorD a({2}, {3.0, -1.0});
  const auto g2 = finite_diff_grad([&](const TensorD& x) { return dot(a, x); }, TensorD({2}, {0.4, -7.0}), 1e-5);
  CHECK(std::abs(g2[0] - 3.0) <= 1e-8);
  CHECK(std::abs(g2[1] + 1.0) <= 1e-8);

  const auto g3 = finite_diff_grad([](const TensorD& x) { return x[0] * x[1]; }, TensorD({2}, {3.0, 5.0}), 1e-5);
  CHECK(std::abs(g3[0] - 5.0) <= 1e-6);
  CHECK(std::abs(g3[1] - 3.0) <= 1e-6);

  CHECK_THROWS_AS(finite_diff_grad(sumsq, TensorD({1}), 0.0), Error);
}

namespace {

Checkpoint sample_checkpoint() {
  RngStream r(11, 0);
  Checkpoint ck;
  ck.params.push_back({"g/layer0.weight", randn<float>({2, 3, 4, 4}, r)});
  ck.params.push_back({"g/layer1.gamma", randn<float>({3}, r)});
  ck.optimizer_state.push_back({"g/layer0.weight/m", randn<float>({2, 3, 4, 4}, r)});
  TensorD step({1});
  step[0] = 17;
  ck.optimizer_state.push_back({"g/step", step});
  ck.rng_states.push_back({"latent", RngStream(1, 2, 345)});
  ck.iteration = 17;
  ck.config_hash = 0x1234abcd5678ef00ull;
  return ck;
}

}  // namespace

TEST_CASE("checkpoint roundtrip is bitwise") {
  test::TempDir dir("ckpt");
  const Checkpoint ck = sample_checkpoint();
  checkpoint_save(ck, dir / "a.ckpt");
  const Checkpoint back = checkpoint_load(dir / "a.ckpt");
  CHECK(back == ck);
  CHECK(back.param_as<float>("g/layer1.gamma") == std::get<TensorF>(ck.params[1].tensor));
  CHECK_THROWS_AS(back.param_as<double>("g/layer1.gamma"), Error);
  CHECK(back.find_rng("latent")->state.counter() == 345);
  CHECK(encode_checkpoint(back) == encode_checkpoint(ck));
}

TEST_CASE("empty checkpoint is valid") {
  test::TempDir dir("ckpt-empty");
  checkpoint_save(Checkpoint{}, dir / "e.ckpt");
  const Checkpoint back = checkpoint_load(dir / "e.ckpt");
  CHECK(back.params.empty());
  CHECK(back.optimizer_state.empty());
  CHECK(back.rng_states.empty());
}

TEST_CASE("truncated checkpoint reports a payload length mismatch") {
  auto bytes = encode_checkpoint(sample_checkpoint());
  bytes.pop_back();
  try {
    decode_checkpoint(bytes);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PayloadLengthMismatch);
    CHECK(std::string(e.what()).find("payload length mismatch") != std::string::npos);
  }
}

TEST_CASE("corrupt and unreadable checkpoints") {
  const std::vector<std::uint8_t> junk = {'n', 'o', 'p', 'e'};
  try {
    decode_checkpoint(junk);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorruptFile);
  }
  try {
    checkpoint_load("/nonexistent/dir/x.ckpt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
  try {
    checkpoint_save(Checkpoint{}, "/nonexistent/dir/x.ckpt");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnwritablePath);
  }
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}
