// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "boolgan/layers.hpp"

namespace boolgan::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> seq{0};
    path_ = std::filesystem::temp_directory_path() /
            ("boolgan-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(seq++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Direct six-loop cross-correlation with zero padding.
inline TensorD naive_conv2d(const TensorD& x, const TensorD& w, const TensorD& b, const ConvGeometry& g) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t k = g.kernel, s = g.stride, p = g.padding, F = g.out_channels;
  const std::size_t OH = (H + 2 * p - k) / s + 1, OW = (W + 2 * p - k) / s + 1;
  TensorD y({N, F, OH, OW});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < OH; ++i)
        for (std::size_t j = 0; j < OW; ++j) {
          double acc = b[f];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t a = 0; a < k; ++a)
              for (std::size_t q = 0; q < k; ++q) {
                const long h = long(i * s + a) - long(p), v = long(j * s + q) - long(p);
                if (h < 0 || v < 0 || h >= long(H) || v >= long(W)) continue;
                acc += x.at(n, c, h, v) * w.at(f, c, a, q);
              }
          y.at(n, f, i, j) = acc;
        }
  return y;
}

/// Direct scatter form of the transposed convolution, weight [C, F, k, k].
inline TensorD naive_convtranspose2d(const TensorD& x, const TensorD& w, const TensorD& b,
                                     const ConvGeometry& g) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t k = g.kernel, s = g.stride, p = g.padding, F = g.out_channels;
  const std::size_t OH = (H - 1) * s + k - 2 * p, OW = (W - 1) * s + k - 2 * p;
  TensorD y({N, F, OH, OW});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t i = 0; i < OH; ++i)
        for (std::size_t j = 0; j < OW; ++j) y.at(n, f, i, j) = b[f];
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j)
          for (std::size_t f = 0; f < F; ++f)
            for (std::size_t a = 0; a < k; ++a)
              for (std::size_t q = 0; q < k; ++q) {
                const long h = long(i * s + a) - long(p), v = long(j * s + q) - long(p);
                if (h < 0 || v < 0 || h >= long(OH) || v >= long(OW)) continue;
                y.at(n, f, h, v) += x.at(n, c, i, j) * w.at(c, f, a, q);
              }
  return y;
}

inline double max_abs_diff(const TensorD& a, const TensorD& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace boolgan::test
