// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "boolgan/rng.hpp"
#include "boolgan/tensor.hpp"

namespace boolgan {

using AnyTensor = std::variant<TensorF, TensorD>;

DType dtype_of(const AnyTensor& t) noexcept;
const Shape& shape_of(const AnyTensor& t) noexcept;

struct NamedTensor {
  std::string name;
  AnyTensor tensor;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct NamedRng {
  std::string name;
  RngStream state;
  friend bool operator==(const NamedRng&, const NamedRng&) = default;
};

/// Everything needed to resume a run bit-for-bit.
///
/// File layout (all integers and floats little-endian):
///
///     "BOOLGAN-CKPT 1\n"
///     u64 manifest_bytes
///     manifest text, one record per '\n'-terminated line:
///         iteration <u64>
///         config_hash <u64>
///         rng <name> <seed> <stream_id> <counter>
///         param <name> <f32|f64> <rank> <extent>...
///         opt <name> <f32|f64> <rank> <extent>...
///     payload: raw values of every param, then every opt tensor, in
///     manifest order; nothing may follow it.
struct Checkpoint {
  std::vector<NamedTensor> params;
  std::vector<NamedTensor> optimizer_state;
  std::vector<NamedRng> rng_states;
  std::uint64_t iteration = 0;
  std::uint64_t config_hash = 0;

  const NamedTensor* find_param(std::string_view name) const noexcept;
  const NamedTensor* find_optimizer_state(std::string_view name) const noexcept;
  const NamedRng* find_rng(std::string_view name) const noexcept;

  /// Typed access; throws DtypeMismatch when the stored dtype differs and
  /// InvalidArgument when the name is absent.
  template <typename T>
  const Tensor<T>& param_as(std::string_view name) const;
  template <typename T>
  const Tensor<T>& optimizer_state_as(std::string_view name) const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint checkpoint_load(const std::filesystem::path& path);

/// 64-bit FNV-1a, used for config fingerprints.
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace boolgan
