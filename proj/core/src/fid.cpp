// SPDX-License-Identifier: Apache-2.0
#include "boolgan/fid.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "boolgan/layers.hpp"
#include "boolgan/rng.hpp"

namespace boolgan {

namespace {

constexpr double kJacobiTolerance = 1e-12;
constexpr int kJacobiMaxSweeps = 100;
constexpr double kSymmetryTolerance = 1e-8;

void require_square(const TensorD& a, const char* what) {
  require(a.rank() == 2 && a.dim(0) == a.dim(1), ErrorKind::ShapeMismatch,
          std::string(what) + ": expected a square matrix, got " + shape_string(a.shape()));
}

TensorD symmetrized(const TensorD& a) {
  const std::size_t d = a.dim(0);
  TensorD s(a.shape());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) s[i * d + j] = 0.5 * (a[i * d + j] + a[j * d + i]);
  return s;
}

void check_symmetric(const TensorD& a, const char* what) {
  const double scale = std::max(1.0, max_abs(a));
  if (asymmetry(a) > kSymmetryTolerance * scale)
    fail(ErrorKind::InvalidArgument, std::string(what) + ": matrix is not symmetric (max |a - a^T| = " +
                                         std::to_string(asymmetry(a)) + ")");
}

double trace(const TensorD& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.dim(0); ++i) t += a[i * a.dim(0) + i];
  return t;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line,
                              const std::string& what) {
  fail(ErrorKind::Parse, path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

double asymmetry(const TensorD& a) {
  require_square(a, "asymmetry");
  const std::size_t d = a.dim(0);
  double m = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) m = std::max(m, std::abs(a[i * d + j] - a[j * d + i]));
  return m;
}

SymmetricEigen jacobi_eigen(const TensorD& input) {
  require_square(input, "jacobi_eigen");
  const std::size_t d = input.dim(0);
  TensorD a = symmetrized(input);
  SymmetricEigen out;
  out.vectors = TensorD({d, d});
  for (std::size_t i = 0; i < d; ++i) out.vectors[i * d + i] = 1.0;
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a[i * d + j]; };
  auto V = [&](std::size_t i, std::size_t j) -> double& { return out.vectors[i * d + j]; };

  double norm = 0.0;
  for (double v : a.values()) norm += v * v;
  norm = std::sqrt(norm);

  for (; out.sweeps < kJacobiMaxSweeps; ++out.sweeps) {
    double off = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (i != j) off += A(i, j) * A(i, j);
    if (std::sqrt(off) <= kJacobiTolerance * norm) break;

    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        A(p, p) -= t * apq;
        A(q, q) += t * apq;
        A(p, q) = A(q, p) = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          if (k == p || k == q) continue;
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = A(p, k) = c * akp - s * akq;
          A(k, q) = A(q, k) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  out.values.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.values[i] = A(i, i);
  return out;
}

TensorD matmul(const TensorD& a, const TensorD& b) {
  require(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0), ErrorKind::ShapeMismatch,
          "matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
              shape_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  TensorD c({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = a[i * k + l];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += ail * b[l * n + j];
    }
  return c;
}

TensorD sqrtm_psd(const TensorD& a) {
  require_square(a, "sqrtm_psd");
  check_symmetric(a, "sqrtm_psd");
  const std::size_t d = a.dim(0);
  const auto eig = jacobi_eigen(a);
  TensorD s({d, d});
  for (std::size_t k = 0; k < d; ++k) {
    const double root = std::sqrt(std::max(eig.values[k], 0.0));
    if (root == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) {
      const double vik = eig.vectors[i * d + k] * root;
      for (std::size_t j = 0; j < d; ++j) s[i * d + j] += vik * eig.vectors[j * d + k];
    }
  }
  return symmetrized(s);
}

GaussianStats gaussian_stats(const TensorD& features) {
  require(features.rank() == 2, ErrorKind::ShapeMismatch,
          "gaussian_stats: expected [n, d] features, got " + shape_string(features.shape()));
  const std::size_t n = features.dim(0), d = features.dim(1);
  require(n >= 2, ErrorKind::InvalidArgument,
          "gaussian_stats: need at least 2 samples, got " + std::to_string(n));
  GaussianStats st{std::vector<double>(d, 0.0), TensorD({d, d})};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) st.mu[j] += features[i * d + j];
  for (double& m : st.mu) m /= static_cast<double>(n);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered[j] = features[i * d + j] - st.mu[j];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) st.sigma[a * d + b] += centered[a] * centered[b];
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      st.sigma[a * d + b] /= denom;
      st.sigma[b * d + a] = st.sigma[a * d + b];
    }
  return st;
}

double trace_sqrt_product(const TensorD& sigma_r, const TensorD& sigma_g) {
  require_square(sigma_r, "trace_sqrt_product");
  require_square(sigma_g, "trace_sqrt_product");
  require(sigma_r.dim(0) == sigma_g.dim(0), ErrorKind::ShapeMismatch,
          "trace_sqrt_product: dimension mismatch");
  const TensorD root_r = sqrtm_psd(sigma_r);
  const TensorD inner = symmetrized(matmul(matmul(root_r, sigma_g), root_r));
  const auto eig = jacobi_eigen(inner);
  double t = 0.0;
  for (double v : eig.values) t += std::sqrt(std::max(v, 0.0));
  return t;
}

double frechet_distance(const GaussianStats& r, const GaussianStats& g) {
  require(r.mu.size() == g.mu.size(), ErrorKind::ShapeMismatch,
          "frechet_distance: dimension mismatch (" + std::to_string(r.mu.size()) + " vs " +
              std::to_string(g.mu.size()) + ")");
  const Shape sq{r.mu.size(), r.mu.size()};
  require_shape(r.sigma, sq, "frechet_distance sigma_r");
  require_shape(g.sigma, sq, "frechet_distance sigma_g");
  double mean_term = 0.0;
  for (std::size_t i = 0; i < r.mu.size(); ++i) {
    const double diff = r.mu[i] - g.mu[i];
    mean_term += diff * diff;
  }
  const double value = mean_term + trace(r.sigma) + trace(g.sigma) -
                       2.0 * trace_sqrt_product(r.sigma, g.sigma);
  return std::max(value, 0.0);
}

TensorD embed_images(const TensorF& images, const EmbedderSpec& spec) {
  if (spec.kind == EmbedderKind::ExternalFile)
    fail(ErrorKind::InvalidArgument,
         "embed_images: external-file embeddings are read with load_features, not computed");
  require(spec.output_dim >= 1, ErrorKind::InvalidArgument, "embed_images: output_dim must be >= 1");
  require(images.rank() == 4 && images.dim(1) == 3, ErrorKind::ShapeMismatch,
          "embed_images: expected [n,3,H,W] images, got " + shape_string(images.shape()));
  for (float v : images.values())
    require(v >= -1.0f - 1e-6f && v <= 1.0f + 1e-6f, ErrorKind::InvalidArgument,
            "embed_images: pixel values must lie in [-1, 1]");

  constexpr std::size_t kHidden = 32;
  const ConvGeometry first{4, 2, 1, 3, kHidden};
  const ConvGeometry second{4, 2, 1, kHidden, spec.output_dim};
  RngStream rng(spec.seed, 0xE3BEDDE5ull);
  const TensorF w1 = randn<float>(conv_weight_shape(first), rng, 0.0, std::sqrt(2.0 / (3 * 16)));
  const TensorF w2 =
      randn<float>(conv_weight_shape(second), rng, 0.0, std::sqrt(2.0 / (kHidden * 16)));
  const TensorF b1({kHidden}), b2({spec.output_dim});
  const Activation leaky{ActivationKind::LeakyRelu, 0.2};

  const std::size_t n = images.dim(0), per_image = images.size() / std::max<std::size_t>(n, 1);
  TensorD features({n, spec.output_dim});
  constexpr std::size_t kChunk = 64;
  for (std::size_t n0 = 0; n0 < n; n0 += kChunk) {
    const std::size_t nb = std::min(kChunk, n - n0);
    Shape chunk_shape = images.shape();
    chunk_shape[0] = nb;
    TensorF chunk(chunk_shape, std::vector<float>(images.data() + n0 * per_image,
                                                  images.data() + (n0 + nb) * per_image));
    const TensorF h = activation(conv2d(activation(conv2d(chunk, w1, b1, first), leaky), w2, b2, second), leaky);
    const std::size_t plane = h.dim(2) * h.dim(3);
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t c = 0; c < spec.output_dim; ++c) {
        const float* p = h.data() + (i * spec.output_dim + c) * plane;
        double acc = 0.0;
        for (std::size_t k = 0; k < plane; ++k) acc += p[k];
        features[(n0 + i) * spec.output_dim + c] = acc / static_cast<double>(plane);
      }
  }
  return features;
}

TensorD load_features(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open feature file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) parse_error(path, 1, "missing header \"n d\"");
  std::size_t n = 0, d = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> n >> d) || (header >> extra)) parse_error(path, 1, "malformed header, expected \"n d\"");
  }
  TensorD out({n, d});
  std::size_t line_no = 1;
  for (std::size_t row = 0; row < n; ++row) {
    ++line_no;
    if (!std::getline(in, line))
      parse_error(path, line_no, "header declares " + std::to_string(n) + " rows, file has " +
                                     std::to_string(row));
    const char* p = line.data();
    const char* end = line.data() + line.size();
    std::size_t col = 0;
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) parse_error(path, line_no, "invalid number");
      if (col < d) out[row * d + col] = v;
      ++col;
      p = next;
    }
    if (col != d)
      parse_error(path, line_no, "row has " + std::to_string(col) + " values, expected " +
                                     std::to_string(d));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      parse_error(path, line_no, "more rows than the header declares");
  }
  return out;
}

void save_features(const TensorD& features, const std::filesystem::path& path) {
  require(features.rank() == 2, ErrorKind::ShapeMismatch, "save_features: expected [n, d]");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::UnwritablePath, "cannot write feature file '" + path.string() + "'");
  const std::size_t n = features.dim(0), d = features.dim(1);
  out << n << ' ' << d << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out << (j ? " " : "") << features[i * d + j];
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

}  // namespace boolgan
