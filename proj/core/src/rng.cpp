// SPDX-License-Identifier: Apache-2.0
#include "boolgan/rng.hpp"

#include <cmath>
#include <numbers>

namespace boolgan {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t{a} * std::uint64_t{b};
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_open_unit(std::uint64_t bits) {
  // 53 high bits, shifted half a step off zero: (k + 0.5) / 2^53.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

std::array<std::uint32_t, 4> RngStream::next_block() noexcept {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  ++counter_;
  return philox4x32(ctr, key);
}

std::uint64_t RngStream::next_u64() noexcept {
  const auto b = next_block();
  return (std::uint64_t{b[1]} << 32) | b[0];
}

double RngStream::next_uniform() noexcept { return to_open_unit(next_u64()); }

double RngStream::next_normal() noexcept {
  const auto b = next_block();
  const double u1 = to_open_unit((std::uint64_t{b[1]} << 32) | b[0]);
  const double u2 = to_open_unit((std::uint64_t{b[3]} << 32) | b[2]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::next_below(std::uint64_t bound) noexcept {
  // Lemire's multiply-shift; the rejection loop keeps it unbiased.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

RngStream RngStream::derive(std::uint64_t child_id) const noexcept {
  // Mix parent identity into a fresh stream id; seed is inherited.
  std::uint64_t z = stream_id_ * 0x9E3779B97F4A7C15ull + child_id + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return RngStream(seed_, z, 0);
}

template <typename T>
Tensor<T> randn(const Shape& shape, RngStream& rng, double mean, double stddev) {
  Tensor<T> out(shape);
  for (auto& v : out.values()) v = static_cast<T>(mean + stddev * rng.next_normal());
  return out;
}

template <typename T>
Tensor<T> randn(const Shape& shape, RngStream& rng) {
  return randn<T>(shape, rng, 0.0, 1.0);
}

template Tensor<float> randn<float>(const Shape&, RngStream&);
template Tensor<double> randn<double>(const Shape&, RngStream&);
template Tensor<float> randn<float>(const Shape&, RngStream&, double, double);
template Tensor<double> randn<double>(const Shape&, RngStream&, double, double);

}  // namespace boolgan
