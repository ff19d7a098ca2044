// SPDX-License-Identifier: Apache-2.0
#include "boolgan/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "boolgan/gemm.hpp"

namespace boolgan {

namespace {

// Column-matrix budget per chunk of samples, in elements.
constexpr std::size_t kChunkBudget = std::size_t{1} << 21;

struct ImageDims {
  std::size_t channels, height, width;
  std::size_t plane() const { return height * width; }
};

std::size_t samples_per_chunk(std::size_t rows, std::size_t cols_per_sample) {
  const std::size_t per_sample = std::max<std::size_t>(1, rows * cols_per_sample);
  return std::max<std::size_t>(1, kChunkBudget / per_sample);
}

// Output columns [lo, hi) whose input column ow * s + kj - p lies inside
// [0, W).
struct ValidRange {
  std::size_t lo, hi;
};

ValidRange valid_outputs(std::size_t out_w, std::size_t W, std::size_t s, std::size_t kj,
                         std::size_t p) {
  const std::size_t lo = kj >= p ? 0 : (p - kj + s - 1) / s;
  if (W + p <= kj) return {0, 0};
  const std::size_t hi = std::min(out_w, (W - 1 + p - kj) / s + 1);
  return {std::min(lo, hi), hi};
}

// Unfold one image into rows (c, ki, kj) and columns (oh, ow) of a wider
// matrix, starting at column `offset`.
template <typename T>
void im2col(const T* img, const ImageDims& in, std::size_t k, std::size_t s, std::size_t p,
            std::size_t out_h, std::size_t out_w, T* col, std::size_t ld, std::size_t offset) {
  for (std::size_t c = 0; c < in.channels; ++c) {
    const T* plane = img + c * in.plane();
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        T* row = col + ((c * k + ki) * k + kj) * ld + offset;
        const ValidRange r = valid_outputs(out_w, in.width, s, kj, p);
        for (std::size_t oh = 0; oh < out_h; ++oh) {
          T* dst = row + oh * out_w;
          const std::size_t ih = oh * s + ki;
          if (ih < p || ih - p >= in.height) {
            std::fill(dst, dst + out_w, T{0});
            continue;
          }
          std::fill(dst, dst + r.lo, T{0});
          std::fill(dst + r.hi, dst + out_w, T{0});
          const T* src = plane + (ih - p) * in.width + (r.lo * s + kj - p);
          if (s == 1) {
            std::copy(src, src + (r.hi - r.lo), dst + r.lo);
          } else {
            for (std::size_t ow = r.lo; ow < r.hi; ++ow, src += s) dst[ow] = *src;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into the image.
template <typename T>
void col2im(const T* col, std::size_t ld, std::size_t offset, const ImageDims& in, std::size_t k,
            std::size_t s, std::size_t p, std::size_t out_h, std::size_t out_w, T* img) {
  for (std::size_t c = 0; c < in.channels; ++c) {
    T* plane = img + c * in.plane();
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const T* row = col + ((c * k + ki) * k + kj) * ld + offset;
        const ValidRange r = valid_outputs(out_w, in.width, s, kj, p);
        for (std::size_t oh = 0; oh < out_h; ++oh) {
          const std::size_t ih = oh * s + ki;
          if (ih < p || ih - p >= in.height) continue;
          const T* src = row + oh * out_w;
          T* dst = plane + (ih - p) * in.width + (r.lo * s + kj - p);
          if (s == 1) {
            for (std::size_t ow = r.lo; ow < r.hi; ++ow, ++dst) *dst += src[ow];
          } else {
            for (std::size_t ow = r.lo; ow < r.hi; ++ow, dst += s) *dst += src[ow];
          }
        }
      }
    }
  }
}

// Per-thread scratch reused across calls; large buffers would otherwise be
// mapped and unmapped on every layer.
template <typename T>
std::vector<T>& scratch(std::size_t slot) {
  thread_local std::vector<T> buffers[3];
  return buffers[slot];
}

// [n0, n0+nb) x C x P  ->  C x (nb * P)
template <typename T>
void gather_channel_major(const T* x, std::size_t n0, std::size_t nb, std::size_t channels,
                          std::size_t plane, T* out) {
  const std::size_t ld = nb * plane;
  for (std::size_t n = 0; n < nb; ++n)
    for (std::size_t c = 0; c < channels; ++c)
      std::copy_n(x + ((n0 + n) * channels + c) * plane, plane, out + c * ld + n * plane);
}

// C x (nb * P) -> [n0, n0+nb) x C x P, adding a per-channel bias if given.
template <typename T>
void scatter_channel_major(const T* in, std::size_t n0, std::size_t nb, std::size_t channels,
                           std::size_t plane, const T* bias, T* x) {
  const std::size_t ld = nb * plane;
  for (std::size_t n = 0; n < nb; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const T* src = in + c * ld + n * plane;
      T* dst = x + ((n0 + n) * channels + c) * plane;
      const T b = bias ? bias[c] : T{0};
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] + b;
    }
  }
}

template <typename T>
Tensor<T> channel_sums(const Tensor<T>& dy) {
  const std::size_t N = dy.dim(0), F = dy.dim(1), plane = dy.dim(2) * dy.dim(3);
  Tensor<T> db({F});
  for (std::size_t f = 0; f < F; ++f) {
    double acc = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* p = dy.data() + (n * F + f) * plane;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    }
    db[f] = static_cast<T>(acc);
  }
  return db;
}

template <typename T>
void require_nchw(const Tensor<T>& x, std::size_t channels, std::string_view what) {
  if (x.rank() != 4 || x.dim(1) != channels)
    fail(ErrorKind::ShapeMismatch, std::string(what) + ": expected [N," +
                                       std::to_string(channels) + ",H,W] input, got " +
                                       shape_string(x.shape()));
}

}  // namespace

void validate(const ConvGeometry& g) {
  require(g.kernel >= 1 && g.stride >= 1 && g.in_channels >= 1 && g.out_channels >= 1,
          ErrorKind::InvalidArgument, "conv geometry: kernel, stride and channels must be >= 1");
}

std::size_t conv_output_extent(std::size_t in, const ConvGeometry& g) {
  validate(g);
  const std::size_t padded = in + 2 * g.padding;
  if (padded < g.kernel)
    fail(ErrorKind::ShapeMismatch, "conv: kernel " + std::to_string(g.kernel) +
                                       " larger than padded input " + std::to_string(padded));
  if ((padded - g.kernel) % g.stride != 0)
    fail(ErrorKind::ShapeMismatch, "conv: non-integral output extent for input " +
                                       std::to_string(in) + ", k=" + std::to_string(g.kernel) +
                                       ", s=" + std::to_string(g.stride) +
                                       ", p=" + std::to_string(g.padding));
  return (padded - g.kernel) / g.stride + 1;
}

std::size_t convtranspose_output_extent(std::size_t in, const ConvGeometry& g) {
  validate(g);
  require(in >= 1, ErrorKind::ShapeMismatch, "convtranspose: empty input extent");
  const std::size_t grown = (in - 1) * g.stride + g.kernel;
  if (grown <= 2 * g.padding)
    fail(ErrorKind::ShapeMismatch, "convtranspose: non-positive output extent");
  return grown - 2 * g.padding;
}

Shape conv_weight_shape(const ConvGeometry& g) {
  return {g.out_channels, g.in_channels, g.kernel, g.kernel};
}

Shape convtranspose_weight_shape(const ConvGeometry& g) {
  return {g.in_channels, g.out_channels, g.kernel, g.kernel};
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvGeometry& g) {
  validate(g);
  require_nchw(x, g.in_channels, "conv2d");
  require_shape(w, conv_weight_shape(g), "conv2d weight");
  require_shape(b, {g.out_channels}, "conv2d bias");
  const std::size_t N = x.dim(0), F = g.out_channels, k = g.kernel;
  const ImageDims in{g.in_channels, x.dim(2), x.dim(3)};
  const std::size_t Ho = conv_output_extent(in.height, g), Wo = conv_output_extent(in.width, g);
  const std::size_t P = Ho * Wo, R = in.channels * k * k;

  Tensor<T> y({N, F, Ho, Wo});
  const std::size_t chunk = samples_per_chunk(R, P);
  auto& col = scratch<T>(0);
  auto& out = scratch<T>(1);
  for (std::size_t n0 = 0; n0 < N; n0 += chunk) {
    const std::size_t nb = std::min(chunk, N - n0), cols = nb * P;
    col.resize(R * cols);
    out.resize(F * cols);
    for (std::size_t n = 0; n < nb; ++n)
      im2col(x.data() + (n0 + n) * in.channels * in.plane(), in, k, g.stride, g.padding, Ho, Wo,
             col.data(), cols, n * P);
    gemm_overwrite(F, cols, R, w.data(), R, std::size_t{1}, col.data(), cols, out.data(), cols);
    scatter_channel_major(out.data(), n0, nb, F, P, b.data(), y.data());
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_grads(const Tensor<T>& x, const Tensor<T>& w, const ConvGeometry& g,
                          const Tensor<T>& dy, GradRequest request) {
  validate(g);
  require_nchw(x, g.in_channels, "conv2d_grads");
  require_shape(w, conv_weight_shape(g), "conv2d_grads weight");
  const std::size_t N = x.dim(0), F = g.out_channels, k = g.kernel;
  const ImageDims in{g.in_channels, x.dim(2), x.dim(3)};
  const std::size_t Ho = conv_output_extent(in.height, g), Wo = conv_output_extent(in.width, g);
  require_shape(dy, {N, F, Ho, Wo}, "conv2d_grads dy");
  const std::size_t P = Ho * Wo, R = in.channels * k * k;

  ConvGrads<T> grads;
  if (request.input) grads.dx = Tensor<T>(x.shape());
  if (request.params) {
    grads.dw = Tensor<T>(w.shape());
    grads.db = channel_sums(dy);
  }
  if (!request.input && !request.params) return grads;

  const std::size_t chunk = samples_per_chunk(R, P);
  auto& col = scratch<T>(0);
  auto& dyg = scratch<T>(1);
  auto& dcol = scratch<T>(2);
  for (std::size_t n0 = 0; n0 < N; n0 += chunk) {
    const std::size_t nb = std::min(chunk, N - n0), cols = nb * P;
    dyg.resize(F * cols);
    gather_channel_major(dy.data(), n0, nb, F, P, dyg.data());
    if (request.params) {
      col.resize(R * cols);
      for (std::size_t n = 0; n < nb; ++n)
        im2col(x.data() + (n0 + n) * in.channels * in.plane(), in, k, g.stride, g.padding, Ho,
               Wo, col.data(), cols, n * P);
      gemm_nt_accumulate(F, R, cols, dyg.data(), cols, col.data(), cols, grads.dw.data(), R);
    }
    if (request.input) {
      dcol.resize(R * cols);
      gemm_overwrite(R, cols, F, w.data(), std::size_t{1}, R, dyg.data(), cols, dcol.data(),
                     cols);
      for (std::size_t n = 0; n < nb; ++n)
        col2im(dcol.data(), cols, n * P, in, k, g.stride, g.padding, Ho, Wo,
               grads.dx.data() + (n0 + n) * in.channels * in.plane());
    }
  }
  return grads;
}

template <typename T>
Tensor<T> convtranspose2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                          const ConvGeometry& g) {
  validate(g);
  require_nchw(x, g.in_channels, "convtranspose2d");
  require_shape(w, convtranspose_weight_shape(g), "convtranspose2d weight");
  require_shape(b, {g.out_channels}, "convtranspose2d bias");
  const std::size_t N = x.dim(0), C = g.in_channels, F = g.out_channels, k = g.kernel;
  const std::size_t H = x.dim(2), W = x.dim(3);
  const ImageDims out{F, convtranspose_output_extent(H, g), convtranspose_output_extent(W, g)};
  const std::size_t P = H * W, R = F * k * k;

  Tensor<T> y({N, F, out.height, out.width});
  const std::size_t chunk = samples_per_chunk(R, P);
  auto& xg = scratch<T>(1);
  auto& col = scratch<T>(0);
  for (std::size_t n0 = 0; n0 < N; n0 += chunk) {
    const std::size_t nb = std::min(chunk, N - n0), cols = nb * P;
    xg.resize(C * cols);
    gather_channel_major(x.data(), n0, nb, C, P, xg.data());
    col.resize(R * cols);
    gemm_overwrite(R, cols, C, w.data(), std::size_t{1}, R, xg.data(), cols, col.data(), cols);
    for (std::size_t n = 0; n < nb; ++n)
      col2im(col.data(), cols, n * P, out, k, g.stride, g.padding, H, W,
             y.data() + (n0 + n) * F * out.plane());
  }
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t f = 0; f < F; ++f) {
      T* plane = y.data() + (n * F + f) * out.plane();
      for (std::size_t i = 0; i < out.plane(); ++i) plane[i] += b[f];
    }
  return y;
}

template <typename T>
ConvGrads<T> convtranspose2d_grads(const Tensor<T>& x, const Tensor<T>& w,
                                   const ConvGeometry& g, const Tensor<T>& dy,
                                   GradRequest request) {
  validate(g);
  require_nchw(x, g.in_channels, "convtranspose2d_grads");
  require_shape(w, convtranspose_weight_shape(g), "convtranspose2d_grads weight");
  const std::size_t N = x.dim(0), C = g.in_channels, F = g.out_channels, k = g.kernel;
  const std::size_t H = x.dim(2), W = x.dim(3);
  const ImageDims out{F, convtranspose_output_extent(H, g), convtranspose_output_extent(W, g)};
  require_shape(dy, {N, F, out.height, out.width}, "convtranspose2d_grads dy");
  const std::size_t P = H * W, R = F * k * k;

  ConvGrads<T> grads;
  if (request.input) grads.dx = Tensor<T>(x.shape());
  if (request.params) {
    grads.dw = Tensor<T>(w.shape());
    grads.db = channel_sums(dy);
  }
  if (!request.input && !request.params) return grads;

  const std::size_t chunk = samples_per_chunk(R, P);
  auto& dcol = scratch<T>(0);
  auto& dxg = scratch<T>(1);
  auto& xg = scratch<T>(2);
  for (std::size_t n0 = 0; n0 < N; n0 += chunk) {
    const std::size_t nb = std::min(chunk, N - n0), cols = nb * P;
    dcol.resize(R * cols);
    for (std::size_t n = 0; n < nb; ++n)
      im2col(dy.data() + (n0 + n) * F * out.plane(), out, k, g.stride, g.padding, H, W,
             dcol.data(), cols, n * P);
    if (request.input) {
      dxg.resize(C * cols);
      gemm_overwrite(C, cols, R, w.data(), R, std::size_t{1}, dcol.data(), cols, dxg.data(),
                     cols);
      scatter_channel_major<T>(dxg.data(), n0, nb, C, P, nullptr, grads.dx.data());
    }
    if (request.params) {
      xg.resize(C * cols);
      gather_channel_major(x.data(), n0, nb, C, P, xg.data());
      gemm_nt_accumulate(C, R, cols, xg.data(), cols, dcol.data(), cols, grads.dw.data(), R);
    }
  }
  return grads;
}

template <typename T>
BatchNormState<T> make_batchnorm_state(std::size_t channels) {
  BatchNormState<T> s;
  s.gamma = Tensor<T>({channels}, T{1});
  s.beta = Tensor<T>({channels}, T{0});
  s.running_mean = Tensor<T>({channels}, T{0});
  s.running_var = Tensor<T>({channels}, T{1});
  return s;
}

namespace {

template <typename T>
void require_bn_shapes(const Tensor<T>& x, const BatchNormState<T>& s) {
  require(x.rank() == 4, ErrorKind::ShapeMismatch,
          "batchnorm2d: expected NCHW input, got " + shape_string(x.shape()));
  const Shape ch{x.dim(1)};
  require_shape(s.gamma, ch, "batchnorm2d gamma");
  require_shape(s.beta, ch, "batchnorm2d beta");
  require_shape(s.running_mean, ch, "batchnorm2d running_mean");
  require_shape(s.running_var, ch, "batchnorm2d running_var");
}

struct ChannelMoments {
  double mean = 0.0;
  double var = 0.0;  // biased
};

template <typename T>
ChannelMoments channel_moments(const Tensor<T>& x, std::size_t c) {
  const std::size_t N = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
  const double count = static_cast<double>(N * plane);
  double s = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const T* p = x.data() + (n * C + c) * plane;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
  }
  const double mean = s / count;
  double ss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const T* p = x.data() + (n * C + c) * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      const double d = p[i] - mean;
      ss += d * d;
    }
  }
  return {mean, ss / count};
}

}  // namespace

template <typename T>
BatchNormResult<T> batchnorm2d(const Tensor<T>& x, const BatchNormState<T>& state, Mode mode) {
  require_bn_shapes(x, state);
  const std::size_t N = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
  const std::size_t count = N * plane;
  BatchNormResult<T> result{Tensor<T>(x.shape()), state};
  if (mode == Mode::Train && count < 2)
    fail(ErrorKind::InvalidArgument,
         "batchnorm2d: train mode needs at least 2 values per channel, got " + shape_string(x.shape()));

  for (std::size_t c = 0; c < C; ++c) {
    double mean, var;
    if (mode == Mode::Train) {
      const auto m = channel_moments(x, c);
      mean = m.mean;
      var = m.var;
      const double unbiased = m.var * static_cast<double>(count) / static_cast<double>(count - 1);
      const double mom = state.momentum;
      result.state.running_mean[c] =
          static_cast<T>((1.0 - mom) * state.running_mean[c] + mom * mean);
      result.state.running_var[c] =
          static_cast<T>((1.0 - mom) * state.running_var[c] + mom * unbiased);
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    const double scale = state.gamma[c] / std::sqrt(var + state.eps);
    const double shift = state.beta[c] - mean * scale;
    for (std::size_t n = 0; n < N; ++n) {
      const T* src = x.data() + (n * C + c) * plane;
      T* dst = result.y.data() + (n * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<T>(src[i] * scale + shift);
    }
  }
  return result;
}

template <typename T>
BatchNormGrads<T> batchnorm2d_grads(const Tensor<T>& x, const BatchNormState<T>& state,
                                    const Tensor<T>& dy) {
  require_bn_shapes(x, state);
  require_shape(dy, x.shape(), "batchnorm2d_grads dy");
  const std::size_t N = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
  const double count = static_cast<double>(N * plane);
  BatchNormGrads<T> g{Tensor<T>(x.shape()), Tensor<T>({C}), Tensor<T>({C})};

  for (std::size_t c = 0; c < C; ++c) {
    const auto m = channel_moments(x, c);
    const double inv_std = 1.0 / std::sqrt(m.var + state.eps);
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* xs = x.data() + (n * C + c) * plane;
      const T* ds = dy.data() + (n * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += ds[i];
        sum_dy_xhat += ds[i] * (xs[i] - m.mean) * inv_std;
      }
    }
    g.dbeta[c] = static_cast<T>(sum_dy);
    g.dgamma[c] = static_cast<T>(sum_dy_xhat);
    const double k = state.gamma[c] * inv_std / count;
    for (std::size_t n = 0; n < N; ++n) {
      const T* xs = x.data() + (n * C + c) * plane;
      const T* ds = dy.data() + (n * C + c) * plane;
      T* dx = g.dx.data() + (n * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xhat = (xs[i] - m.mean) * inv_std;
        dx[i] = static_cast<T>(k * (count * ds[i] - sum_dy - xhat * sum_dy_xhat));
      }
    }
  }
  return g;
}

template <typename T>
DropoutResult<T> dropout(const Tensor<T>& x, double p, Mode mode, RngStream& rng) {
  require(p >= 0.0 && p < 1.0, ErrorKind::InvalidArgument,
          "dropout: probability must lie in [0, 1), got " + std::to_string(p));
  DropoutResult<T> r{x, Tensor<T>(x.shape(), T{1})};
  if (mode == Mode::Eval || p == 0.0) return r;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool keep = rng.next_uniform() >= p;
    r.mask[i] = keep ? keep_scale : T{0};
    r.y[i] = x[i] * r.mask[i];
  }
  return r;
}

template <typename T>
Tensor<T> dropout_grad(const Tensor<T>& dy, const Tensor<T>& mask) {
  require_shape(dy, mask.shape(), "dropout_grad dy");
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
  return dx;
}

std::string_view to_string(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::Relu: return "relu";
    case ActivationKind::LeakyRelu: return "leaky_relu";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation act) {
  Tensor<T> y(x.shape());
  const T alpha = static_cast<T>(act.alpha);
  switch (act.kind) {
    case ActivationKind::Relu:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
      break;
    case ActivationKind::LeakyRelu:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : alpha * x[i];
      break;
    case ActivationKind::Tanh:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
      break;
    case ActivationKind::Sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] >= T{0}) {
          y[i] = T{1} / (T{1} + std::exp(-x[i]));
        } else {
          const T e = std::exp(x[i]);
          y[i] = e / (T{1} + e);
        }
      }
      break;
  }
  return y;
}

template <typename T>
Tensor<T> activation_grad(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& dy,
                          Activation act) {
  require_shape(dy, x.shape(), "activation_grad dy");
  require_shape(y, x.shape(), "activation_grad y");
  Tensor<T> dx(x.shape());
  const T alpha = static_cast<T>(act.alpha);
  switch (act.kind) {
    case ActivationKind::Relu:
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{0} ? dy[i] : T{0};
      break;
    case ActivationKind::LeakyRelu:
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{0} ? dy[i] : alpha * dy[i];
      break;
    case ActivationKind::Tanh:
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * (T{1} - y[i] * y[i]);
      break;
    case ActivationKind::Sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * y[i] * (T{1} - y[i]);
      break;
  }
  return dx;
}

#define BOOLGAN_INSTANTIATE_LAYERS(T)                                                          \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                               const ConvGeometry&);                                           \
  template ConvGrads<T> conv2d_grads<T>(const Tensor<T>&, const Tensor<T>&,                    \
                                        const ConvGeometry&, const Tensor<T>&, GradRequest);   \
  template Tensor<T> convtranspose2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                        const ConvGeometry&);                                  \
  template ConvGrads<T> convtranspose2d_grads<T>(const Tensor<T>&, const Tensor<T>&,           \
                                                 const ConvGeometry&, const Tensor<T>&,        \
                                                 GradRequest);                                 \
  template BatchNormState<T> make_batchnorm_state<T>(std::size_t);                             \
  template BatchNormResult<T> batchnorm2d<T>(const Tensor<T>&, const BatchNormState<T>&, Mode); \
  template BatchNormGrads<T> batchnorm2d_grads<T>(const Tensor<T>&, const BatchNormState<T>&,  \
                                                  const Tensor<T>&);                           \
  template DropoutResult<T> dropout<T>(const Tensor<T>&, double, Mode, RngStream&);            \
  template Tensor<T> dropout_grad<T>(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> activation<T>(const Tensor<T>&, Activation);                              \
  template Tensor<T> activation_grad<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                        Activation);

BOOLGAN_INSTANTIATE_LAYERS(float)
BOOLGAN_INSTANTIATE_LAYERS(double)

#undef BOOLGAN_INSTANTIATE_LAYERS

}  // namespace boolgan
