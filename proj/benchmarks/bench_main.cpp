// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "boolgan/fid.hpp"
#include "boolgan/gemm.hpp"
#include "boolgan/layers.hpp"
#include "boolgan/rng.hpp"

using namespace boolgan;

namespace {

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream r(1, 0);
  const TensorF a = randn<float>({n, n}, r), b = randn<float>({n, n}, r);
  TensorF c({n, n});
  for (auto _ : state) {
    gemm_overwrite(n, n, n, a.data(), n, 1, b.data(), n, c.data(), n);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * n * n * n, benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}
BENCHMARK(BM_Gemm)->Arg(64)->Arg(256)->Arg(512);

// Second discriminator layer at width 8, batch 64: 8x32x32 -> 16x16x16.
void BM_Conv2dForward(benchmark::State& state) {
  const ConvGeometry g{4, 2, 1, 8, 16};
  RngStream r(2, 0);
  const TensorF x = randn<float>({64, 8, 32, 32}, r), w = randn<float>(conv_weight_shape(g), r), b({16});
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, b, g));
}
BENCHMARK(BM_Conv2dForward)->Unit(benchmark::kMillisecond);

void BM_ConvTransposeForward(benchmark::State& state) {
  const ConvGeometry g{4, 2, 1, 16, 8};
  RngStream r(3, 0);
  const TensorF x = randn<float>({64, 16, 16, 16}, r), w = randn<float>(convtranspose_weight_shape(g), r), b({8});
  for (auto _ : state) benchmark::DoNotOptimize(convtranspose2d(x, w, b, g));
}
BENCHMARK(BM_ConvTransposeForward)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const ConvGeometry g{4, 2, 1, 8, 16};
  RngStream r(4, 0);
  const TensorF x = randn<float>({64, 8, 32, 32}, r), w = randn<float>(conv_weight_shape(g), r);
  const TensorF dy = randn<float>({64, 16, 16, 16}, r);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_grads(x, w, g, dy));
}
BENCHMARK(BM_Conv2dBackward)->Unit(benchmark::kMillisecond);

void BM_Sqrtm(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  RngStream r(5, 0);
  const TensorD a = randn<double>({2 * d, d}, r);
  const TensorD s = gaussian_stats(a).sigma;
  for (auto _ : state) benchmark::DoNotOptimize(sqrtm_psd(s));
}
BENCHMARK(BM_Sqrtm)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
