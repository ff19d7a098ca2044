// SPDX-License-Identifier: Apache-2.0
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

#include "boolgan/data.hpp"

namespace boolgan {

namespace {

bool is_png(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return b.size() >= 8 && std::memcmp(b.data(), kSig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

ImageU8 decode_png(std::span<const std::uint8_t> bytes, const std::string& origin) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    fail(ErrorKind::CorruptFile, origin + ": " + img.message);
  // Decode as RGBA so alpha can be dropped rather than composited.
  img.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgba.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorKind::CorruptFile, origin + ": " + msg);
  }
  ImageU8 out(img.height, img.width);
  for (std::size_t i = 0; i < out.height * out.width; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.pixels[i * 3 + c] = rgba[i * 4 + c];
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* mgr = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, mgr->message);
  std::longjmp(mgr->jump, 1);
}

// Plain-C shaped on purpose: nothing with a destructor lives across setjmp.
bool decode_jpeg_raw(const std::uint8_t* data, std::size_t size, std::uint8_t** pixels,
                     std::size_t* height, std::size_t* width, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  *pixels = nullptr;
  if (setjmp(err.jump)) {
    std::strncpy(message, err.message, JMSG_LENGTH_MAX);
    jpeg_destroy_decompress(&cinfo);
    std::free(*pixels);
    *pixels = nullptr;
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data, static_cast<unsigned long>(size));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *height = cinfo.output_height;
  *width = cinfo.output_width;
  const std::size_t stride = std::size_t{cinfo.output_width} * 3;
  *pixels = static_cast<std::uint8_t*>(std::malloc(stride * cinfo.output_height));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = *pixels + std::size_t{cinfo.output_scanline} * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

ImageU8 decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& origin) {
  std::uint8_t* raw = nullptr;
  std::size_t h = 0, w = 0;
  char message[JMSG_LENGTH_MAX] = {};
  if (!decode_jpeg_raw(bytes.data(), bytes.size(), &raw, &h, &w, message))
    fail(ErrorKind::CorruptFile, origin + ": " + message);
  ImageU8 out(h, w);
  std::memcpy(out.pixels.data(), raw, h * w * 3);
  std::free(raw);
  return out;
}

}  // namespace

ImageU8 decode_image(std::span<const std::uint8_t> bytes, const std::string& origin) {
  ImageU8 img;
  if (is_png(bytes)) {
    img = decode_png(bytes, origin);
  } else if (is_jpeg(bytes)) {
    img = decode_jpeg(bytes, origin);
  } else {
    fail(ErrorKind::UnsupportedFormat, origin + ": unsupported format (expected PNG or JPEG)");
  }
  require(img.height >= 1 && img.width >= 1, ErrorKind::CorruptFile, origin + ": empty image");
  return img;
}

ImageU8 load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read image '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes, path.string());
}

std::vector<std::uint8_t> encode_png(const ImageU8& image) {
  require(image.height >= 1 && image.width >= 1 &&
              image.pixels.size() == image.height * image.width * 3,
          ErrorKind::InvalidArgument, "encode_png: malformed image");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.pixels.data(), 0, nullptr))
    fail(ErrorKind::Io, std::string("png encode failed: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr))
    fail(ErrorKind::Io, std::string("png encode failed: ") + img.message);
  out.resize(size);
  return out;
}

void save_png(const ImageU8& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::UnwritablePath, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

}  // namespace boolgan
