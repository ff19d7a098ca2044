// SPDX-License-Identifier: Apache-2.0
#include "boolgan/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

namespace boolgan {

namespace {

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

struct Sample {
  std::size_t lo, hi;
  double frac;
};

Sample sample_axis(std::size_t i, std::size_t in, std::size_t out) {
  double s = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(in - 1));
  const auto lo = static_cast<std::size_t>(std::floor(s));
  return {lo, std::min(lo + 1, in - 1), s - static_cast<double>(lo)};
}

}  // namespace

ImageU8 resize_bilinear(const ImageU8& image, std::size_t out_h, std::size_t out_w) {
  require(out_h >= 1 && out_w >= 1, ErrorKind::InvalidArgument, "resize_bilinear: empty target size");
  require(image.height >= 1 && image.width >= 1, ErrorKind::InvalidArgument,
          "resize_bilinear: empty source image");
  ImageU8 out(out_h, out_w);
  std::vector<Sample> xs(out_w);
  for (std::size_t j = 0; j < out_w; ++j) xs[j] = sample_axis(j, image.width, out_w);
  for (std::size_t i = 0; i < out_h; ++i) {
    const Sample sy = sample_axis(i, image.height, out_h);
    for (std::size_t j = 0; j < out_w; ++j) {
      const Sample& sx = xs[j];
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = image.at(sy.lo, sx.lo, c) * (1.0 - sx.frac) + image.at(sy.lo, sx.hi, c) * sx.frac;
        const double bottom = image.at(sy.hi, sx.lo, c) * (1.0 - sx.frac) + image.at(sy.hi, sx.hi, c) * sx.frac;
        const double v = top * (1.0 - sy.frac) + bottom * sy.frac;
        out.at(i, j, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

TensorF to_model_range(const ImageU8& image) {
  const std::size_t H = image.height, W = image.width;
  TensorF t({3, H, W});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        t[(c * H + y) * W + x] = static_cast<float>(image.at(y, x, c) / 127.5 - 1.0);
  return t;
}

std::uint8_t to_byte(float value) {
  const double v = std::round((static_cast<double>(value) + 1.0) * 127.5);
  return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::vector<ImageU8> to_images(const TensorF& batch) {
  require(batch.rank() == 4 && batch.dim(1) == 3, ErrorKind::ShapeMismatch,
          "to_images: expected [n,3,H,W], got " + shape_string(batch.shape()));
  const std::size_t n = batch.dim(0), H = batch.dim(2), W = batch.dim(3);
  std::vector<ImageU8> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImageU8 img(H, W);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) img.at(y, x, c) = to_byte(batch.at(i, c, y, x));
    out.push_back(std::move(img));
  }
  return out;
}

TensorF stack_images(std::span<const ImageU8> images, std::span<const std::size_t> indices) {
  require(!indices.empty(), ErrorKind::InvalidArgument, "stack_images: empty selection");
  const std::size_t H = images[indices[0]].height, W = images[indices[0]].width;
  TensorF out({indices.size(), 3, H, W});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const ImageU8& img = images[indices[k]];
    require(img.height == H && img.width == W, ErrorKind::ShapeMismatch,
            "stack_images: images differ in size");
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
          out.at(k, c, y, x) = static_cast<float>(img.at(y, x, c) / 127.5 - 1.0);
  }
  return out;
}

DatasetIndex index_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    fail(ErrorKind::Io, "dataset root '" + root.string() + "' is not a directory");
  DatasetIndex index{root, {}};
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && has_image_extension(entry.path())) index.files.push_back(entry.path());
  std::sort(index.files.begin(), index.files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return index;
}

std::vector<ImageU8> load_dataset(const DatasetIndex& index, std::size_t size) {
  std::vector<ImageU8> images;
  images.reserve(index.size());
  for (const auto& path : index.files) images.push_back(resize_bilinear(load_image(path), size, size));
  return images;
}

std::vector<std::vector<std::size_t>> make_epoch_batches(std::size_t item_count,
                                                         std::size_t batch_size, RngStream& rng,
                                                         bool drop_last) {
  require(batch_size >= 1, ErrorKind::InvalidArgument, "make_epoch_batches: batch_size must be >= 1");
  require(item_count >= 1, ErrorKind::InvalidArgument, "make_epoch_batches: empty dataset");
  std::vector<std::size_t> order(item_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = item_count; i-- > 1;) std::swap(order[i], order[rng.next_below(i + 1)]);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < item_count; start += batch_size) {
    const std::size_t end = std::min(item_count, start + batch_size);
    if (drop_last && end - start < batch_size) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<ImageU8> make_two_tone_dataset(std::size_t count, std::size_t size, std::uint64_t seed) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 6> kPalette = {{
      {230, 40, 40}, {40, 200, 60}, {40, 70, 230}, {240, 220, 50}, {20, 20, 20}, {235, 235, 235},
  }};
  RngStream rng(seed, 0x7770707eull);
  std::vector<ImageU8> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t a = rng.next_below(kPalette.size());
    std::size_t b = rng.next_below(kPalette.size() - 1);
    if (b >= a) ++b;
    const bool vertical = rng.next_below(2) == 1;
    const std::size_t split = size / 4 + rng.next_below(size / 2 + 1);
    ImageU8 img(size, size);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x) {
        const auto& colour = kPalette[((vertical ? x : y) < split) ? a : b];
        for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = colour[c];
      }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace boolgan
