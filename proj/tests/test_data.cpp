// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <png.h>
#include <set>

#include "boolgan/data.hpp"
#include "boolgan/grid.hpp"
#include "support.hpp"

using namespace boolgan;

namespace {

/// Writes an 8-bit grayscale PNG with libpng directly.
void write_gray_png(const std::filesystem::path& path, std::size_t h, std::size_t w, std::uint8_t value) {
  FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(w, value);
  for (std::size_t y = 0; y < h; ++y) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

TEST_CASE("png decoding") {
  test::TempDir dir("png");
  ImageU8 white(1, 1, 255);
  save_png(white, dir / "white.png");
  const ImageU8 back = load_image(dir / "white.png");
  CHECK(back.height == 1);
  CHECK(back.width == 1);
  CHECK(back == white);

  write_gray_png(dir / "gray.png", 2, 2, 7);
  const ImageU8 gray = load_image(dir / "gray.png");
  CHECK(gray.height == 2);
  CHECK(gray.pixels == std::vector<std::uint8_t>(12, 7));

  RngStream r(1, 0);
  ImageU8 noise(5, 7);
  for (auto& p : noise.pixels) p = static_cast<std::uint8_t>(r.next_below(256));
  CHECK(decode_image(encode_png(noise)) == noise);
}

TEST_CASE("unsupported and missing images") {
  test::TempDir dir("img-bad");
  test::write_file(dir / "notes.png", "just some text\n");
  try {
    load_image(dir / "notes.png");
    FAIL("expected UnsupportedFormat");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnsupportedFormat);
  }
  try {
    load_image(dir / "missing.png");
    FAIL("expected Io");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("bilinear resize") {
  ImageU8 two(1, 2);
  for (std::size_t c = 0; c < 3; ++c) two.at(0, 0, c) = 0, two.at(0, 1, c) = 255;
  const ImageU8 one = resize_bilinear(two, 1, 1);
  CHECK(one.at(0, 0, 0) == 128);

  // Upsampling a horizontal ramp keeps the endpoints and stays monotone.
  ImageU8 ramp(1, 4);
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t c = 0; c < 3; ++c) ramp.at(0, x, c) = static_cast<std::uint8_t>(x * 80);
  const ImageU8 up = resize_bilinear(ramp, 3, 8);
  CHECK(up.at(0, 0, 0) == 0);
  CHECK(up.at(0, 7, 0) == 240);
  for (std::size_t x = 1; x < 8; ++x) CHECK(up.at(1, x, 0) >= up.at(1, x - 1, 0));

  RngStream r(2, 0);
  ImageU8 img(6, 9);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(r.next_below(256));
  CHECK(resize_bilinear(img, 6, 9) == img);
  CHECK_THROWS_AS(resize_bilinear(img, 0, 3), Error);
}

TEST_CASE("model range mapping") {
  ImageU8 img(1, 3);
  img.at(0, 0, 0) = 0;
  img.at(0, 1, 0) = 255;
  img.at(0, 2, 0) = 128;
  const TensorF t = to_model_range(img);
  CHECK(t.shape() == Shape{3, 1, 3});
  CHECK(t[0] == -1.0f);
  CHECK(t[1] == 1.0f);
  CHECK(t[2] == doctest::Approx(0.003922).epsilon(1e-3));
  for (int v = 0; v < 256; ++v) CHECK(to_byte(v / 127.5f - 1.0f) == v);
  CHECK(to_byte(-3.0f) == 0);
  CHECK(to_byte(3.0f) == 255);

  RngStream r(3, 0);
  std::vector<ImageU8> imgs(3, ImageU8(4, 5));
  for (auto& im : imgs)
    for (auto& p : im.pixels) p = static_cast<std::uint8_t>(r.next_below(256));
  const std::vector<std::size_t> idx = {2, 0};
  const TensorF batch = stack_images(imgs, idx);
  CHECK(batch.shape() == Shape{2, 3, 4, 5});
  const auto round_trip = to_images(batch);
  CHECK(round_trip[0] == imgs[2]);
  CHECK(round_trip[1] == imgs[0]);
}

TEST_CASE("epoch batches") {
  RngStream a(4, 1), b(4, 1);
  const auto kept = make_epoch_batches(10, 4, a, true);
  CHECK(kept.size() == 2);
  const auto all = make_epoch_batches(10, 4, b, false);
  REQUIRE(all.size() == 3);
  CHECK(all[2].size() == 2);
  CHECK(kept[0] == all[0]);
  std::set<std::size_t> seen;
  for (const auto& batch : all) seen.insert(batch.begin(), batch.end());
  CHECK(seen.size() == 10);
  CHECK(*seen.rbegin() == 9);

  RngStream c(4, 1);
  make_epoch_batches(10, 4, c, true);
  CHECK_FALSE(make_epoch_batches(10, 4, c, true) == kept);
  CHECK(make_epoch_batches(3, 4, c, true).empty());
}

TEST_CASE("dataset indexing") {
  test::TempDir dir("dataset");
  std::filesystem::create_directories(dir / "sub");
  save_png(ImageU8(4, 6, 10), dir / "b.png");
  save_png(ImageU8(8, 8, 20), dir / "sub/a.png");
  test::write_file(dir / "readme.txt", "ignored");
  const auto index = index_dataset(dir.path());
  REQUIRE(index.size() == 2);
  CHECK(index.files[0].filename() == "b.png");
  const auto images = load_dataset(index, 16);
  CHECK(images[1].height == 16);
  CHECK(images[1].width == 16);
  CHECK(images[0].at(3, 3, 1) == 10);
}

TEST_CASE("two-tone dataset") {
  const auto a = make_two_tone_dataset(20, 16, 5);
  CHECK(a == make_two_tone_dataset(20, 16, 5));
  CHECK_FALSE(a == make_two_tone_dataset(20, 16, 6));
  for (const auto& img : a) {
    std::set<std::array<std::uint8_t, 3>> colours;
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) colours.insert({img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2)});
    CHECK(colours.size() == 2);
  }
}

TEST_CASE("sample grids") {
  std::vector<ImageU8> tiles(64, ImageU8(64, 64, 200));
  CHECK(grid_columns(64) == 8);
  const ImageU8 g = emit_grid(tiles, 8);
  CHECK(g.height == 530);
  CHECK(g.width == 530);
  CHECK(g.at(0, 0, 0) == 0);
  CHECK(g.at(2, 2, 0) == 200);

  std::vector<ImageU8> three(3, ImageU8(4, 4, 9));
  const ImageU8 h = emit_grid(three, 2);
  CHECK(h.height == 2 * 4 + 3 * kGridGutter);
  CHECK(h.width == 2 * 4 + 3 * kGridGutter);
  CHECK(h.at(h.height - 3, h.width - 3, 0) == 0);  // missing tile stays black

  const ImageU8 single = emit_grid(std::vector<ImageU8>(1, ImageU8(4, 4, 9)), grid_columns(1));
  CHECK(single.height == 4 + 2 * kGridGutter);

  std::vector<ImageU8> mixed = {ImageU8(4, 4), ImageU8(5, 4)};
  CHECK_THROWS_AS(emit_grid(mixed, 2), Error);
  CHECK_THROWS_AS(emit_grid(std::span<const ImageU8>{}, 2), Error);
}
