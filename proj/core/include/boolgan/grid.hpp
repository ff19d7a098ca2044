// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "boolgan/data.hpp"

namespace boolgan {

constexpr std::size_t kGridGutter = 2;

/// Tiles equally sized images row-major into ceil(n / cols) rows, separated
/// and surrounded by black gutters. Missing tiles in the last row are black.
ImageU8 emit_grid(std::span<const ImageU8> images, std::size_t cols);

/// Column count used for an n-image grid: ceil(sqrt(n)).
std::size_t grid_columns(std::size_t n);

}  // namespace boolgan
