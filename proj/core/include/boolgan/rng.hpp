// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>

#include "boolgan/tensor.hpp"

namespace boolgan {

/// Counter-based random stream (Philox4x32-10). The triple
/// (seed, stream_id, counter) fully determines every future draw, so streams
/// can be checkpointed, restored, and split without sharing state.
///
/// Each draw consumes exactly one counter value and yields one 128-bit block.
class RngStream {
 public:
  constexpr RngStream() = default;
  constexpr RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter = 0)
      : seed_(seed), stream_id_(stream_id), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Raw 128-bit block at the current counter; advances by one.
  std::array<std::uint32_t, 4> next_block() noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in the open interval (0, 1), 53-bit resolution.
  double next_uniform() noexcept;
  /// Standard normal via Box-Muller on one block.
  double next_normal() noexcept;
  /// Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

  /// Deterministic child stream; its draws never collide with the parent's.
  RngStream derive(std::uint64_t child_id) const noexcept;

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_ = 0;
};

/// Philox4x32-10 on a 128-bit counter with a 64-bit key.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

template <typename T>
Tensor<T> randn(const Shape& shape, RngStream& rng);

template <typename T>
Tensor<T> randn(const Shape& shape, RngStream& rng, double mean, double stddev);

}  // namespace boolgan
