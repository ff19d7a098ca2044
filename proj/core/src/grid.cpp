// SPDX-License-Identifier: Apache-2.0
#include "boolgan/grid.hpp"

#include <algorithm>

namespace boolgan {

ImageU8 emit_grid(std::span<const ImageU8> images, std::size_t cols) {
  require(cols >= 1, ErrorKind::InvalidArgument, "emit_grid: cols must be >= 1");
  require(!images.empty(), ErrorKind::InvalidArgument, "emit_grid: no images");
  const std::size_t th = images[0].height, tw = images[0].width;
  for (const auto& img : images)
    require(img.height == th && img.width == tw, ErrorKind::ShapeMismatch,
            "emit_grid: tiles differ in size");
  const std::size_t rows = (images.size() + cols - 1) / cols;
  ImageU8 canvas(rows * th + (rows + 1) * kGridGutter, cols * tw + (cols + 1) * kGridGutter);
  for (std::size_t n = 0; n < images.size(); ++n) {
    const std::size_t oy = kGridGutter + (n / cols) * (th + kGridGutter);
    const std::size_t ox = kGridGutter + (n % cols) * (tw + kGridGutter);
    for (std::size_t y = 0; y < th; ++y)
      std::copy_n(&images[n].pixels[y * tw * 3], tw * 3, &canvas.at(oy + y, ox, 0));
  }
  return canvas;
}

std::size_t grid_columns(std::size_t n) {
  std::size_t c = 1;
  while (c * c < n) ++c;
  return c;
}

}  // namespace boolgan
