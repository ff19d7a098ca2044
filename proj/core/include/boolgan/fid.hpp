// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "boolgan/tensor.hpp"

namespace boolgan {

/// Eigen-decomposition of a symmetric matrix: A = V diag(values) V^T, with
/// eigenvectors stored as the columns of `vectors`.
struct SymmetricEigen {
  std::vector<double> values;
  TensorD vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi rotations; stops once the off-diagonal Frobenius norm falls
/// below 1e-12 times the matrix norm.
SymmetricEigen jacobi_eigen(const TensorD& a);

/// Largest |a_ij - a_ji|.
double asymmetry(const TensorD& a);

/// Symmetric S with S*S = A. Negative eigenvalues (round-off on a PSD input)
/// are clamped to zero first. Throws InvalidArgument when A is visibly
/// asymmetric (beyond 1e-8 relative to its largest entry).
TensorD sqrtm_psd(const TensorD& a);

TensorD matmul(const TensorD& a, const TensorD& b);

struct GaussianStats {
  std::vector<double> mu;
  TensorD sigma;
};

/// Column means and unbiased (n-1) covariance of an [n, d] feature matrix.
GaussianStats gaussian_stats(const TensorD& features);

/// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}), clamped at zero.
/// The trace of the non-symmetric product's root is taken as
/// Tr(sqrtm(A S_g A)) with A = sqrtm(S_r), which has the same spectrum.
double frechet_distance(const GaussianStats& r, const GaussianStats& g);

/// Tr((S_r S_g)^{1/2}) via the symmetric reduction above.
double trace_sqrt_product(const TensorD& sigma_r, const TensorD& sigma_g);

enum class EmbedderKind { FixedRandomConv, ExternalFile };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::FixedRandomConv;
  std::uint64_t seed = 0;
  std::size_t output_dim = 64;
};

/// Frozen, seeded two-stage conv feature extractor: conv(3->32, k4 s2 p1) +
/// LeakyReLU, conv(32->output_dim, k4 s2 p1) + LeakyReLU, global average pool.
/// Its distances are self-consistent but not comparable to Inception FIDs.
TensorD embed_images(const TensorF& images, const EmbedderSpec& spec);

/// Text feature file: first line "n d", then n lines of d floats.
TensorD load_features(const std::filesystem::path& path);
void save_features(const TensorD& features, const std::filesystem::path& path);

}  // namespace boolgan
