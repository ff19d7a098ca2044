// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "boolgan/rng.hpp"
#include "boolgan/tensor.hpp"

namespace boolgan {

/// 8-bit RGB image, row-major with interleaved channels.
struct ImageU8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  ImageU8() = default;
  ImageU8(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(h * w * 3, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * 3 + c];
  }

  friend bool operator==(const ImageU8&, const ImageU8&) = default;
};

/// Decodes PNG or JPEG into 8-bit RGB; grayscale is replicated across the
/// channels and alpha is dropped. Io for unreadable files, UnsupportedFormat
/// for anything that is neither PNG nor JPEG.
ImageU8 load_image(const std::filesystem::path& path);
ImageU8 decode_image(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");

std::vector<std::uint8_t> encode_png(const ImageU8& image);
void save_png(const ImageU8& image, const std::filesystem::path& path);

/// Bilinear resampling with pixel-center alignment: output (i, j) samples the
/// source at ((i + 0.5) * H / out_h - 0.5, (j + 0.5) * W / out_w - 0.5), with
/// coordinates clamped to the image. Aspect ratio is not preserved.
ImageU8 resize_bilinear(const ImageU8& image, std::size_t out_h, std::size_t out_w);

/// Channels-first float tensor [3, H, W] with value / 127.5 - 1.
TensorF to_model_range(const ImageU8& image);
/// Inverse map, round((x + 1) * 127.5) clamped to [0, 255].
std::uint8_t to_byte(float value);
/// [n, 3, H, W] in [-1, 1] -> n images.
std::vector<ImageU8> to_images(const TensorF& batch);
/// Stacks the selected images (all the same size) into [k, 3, H, W].
TensorF stack_images(std::span<const ImageU8> images, std::span<const std::size_t> indices);

/// Image files under a root directory, ordered lexicographically by path.
struct DatasetIndex {
  std::filesystem::path root;
  std::vector<std::filesystem::path> files;
  std::size_t size() const noexcept { return files.size(); }
};

DatasetIndex index_dataset(const std::filesystem::path& root);

/// Loads every indexed image and resizes it to size x size.
std::vector<ImageU8> load_dataset(const DatasetIndex& index, std::size_t size);

/// A seeded permutation of [0, n) chunked into batches; the short tail is
/// dropped iff drop_last.
std::vector<std::vector<std::size_t>> make_epoch_batches(std::size_t item_count,
                                                         std::size_t batch_size, RngStream& rng,
                                                         bool drop_last);

/// Procedural two-tone images: a straight horizontal or vertical boundary
/// splitting two flat colours drawn from a small palette.
std::vector<ImageU8> make_two_tone_dataset(std::size_t count, std::size_t size, std::uint64_t seed);

}  // namespace boolgan
