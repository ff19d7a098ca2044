// SPDX-License-Identifier: Apache-2.0
#include "boolgan/gemm.hpp"

#include <algorithm>

namespace boolgan {

namespace {

// 64-byte vectors; unaligned access is fine through these types.
template <typename T>
struct VecOf;
template <>
struct VecOf<float> {
  typedef float type __attribute__((vector_size(64), aligned(4)));
};
template <>
struct VecOf<double> {
  typedef double type __attribute__((vector_size(64), aligned(8)));
};

template <typename T>
using Vec = typename VecOf<T>::type;

template <typename T>
constexpr std::size_t kLanes = 64 / sizeof(T);

constexpr std::size_t kMaxRows = 6;
constexpr std::size_t kVecsPerTile = 2;
constexpr std::size_t KC = 256;

// MR x (2 vectors) tile of C held in registers across the K loop.
template <typename T, std::size_t MR>
inline void tile_kernel(std::size_t K, const T* A, std::size_t a_rs, std::size_t a_cs, const T* B,
                        std::size_t ldb, T* C, std::size_t ldc, bool load_c) {
  using V = Vec<T>;
  constexpr std::size_t L = kLanes<T>;
  V acc[MR][kVecsPerTile];
  for (std::size_t r = 0; r < MR; ++r)
    for (std::size_t v = 0; v < kVecsPerTile; ++v)
      acc[r][v] = load_c ? *reinterpret_cast<const V*>(C + r * ldc + v * L) : V{};
  for (std::size_t k = 0; k < K; ++k) {
    const T* b = B + k * ldb;
    const V b0 = *reinterpret_cast<const V*>(b);
    const V b1 = *reinterpret_cast<const V*>(b + L);
    const T* a = A + k * a_cs;
    for (std::size_t r = 0; r < MR; ++r) {
      const T ar = a[r * a_rs];
      acc[r][0] += ar * b0;
      acc[r][1] += ar * b1;
    }
  }
  for (std::size_t r = 0; r < MR; ++r)
    for (std::size_t v = 0; v < kVecsPerTile; ++v) *reinterpret_cast<V*>(C + r * ldc + v * L) = acc[r][v];
}

template <typename T>
inline void tile_dispatch(std::size_t rows, std::size_t K, const T* A, std::size_t a_rs,
                          std::size_t a_cs, const T* B, std::size_t ldb, T* C, std::size_t ldc,
                          bool load_c) {
  switch (rows) {
    case 6: tile_kernel<T, 6>(K, A, a_rs, a_cs, B, ldb, C, ldc, load_c); break;
    case 5: tile_kernel<T, 5>(K, A, a_rs, a_cs, B, ldb, C, ldc, load_c); break;
    case 4: tile_kernel<T, 4>(K, A, a_rs, a_cs, B, ldb, C, ldc, load_c); break;
    case 3: tile_kernel<T, 3>(K, A, a_rs, a_cs, B, ldb, C, ldc, load_c); break;
    case 2: tile_kernel<T, 2>(K, A, a_rs, a_cs, B, ldb, C, ldc, load_c); break;
    default: tile_kernel<T, 1>(K, A, a_rs, a_cs, B, ldb, C, ldc, load_c); break;
  }
}

// Ragged column edge: one row at a time.
template <typename T>
inline void row_kernel(std::size_t n, std::size_t K, const T* A, std::size_t a_cs, const T* B,
                       std::size_t ldb, T* C, bool load_c) {
  if (!load_c) std::fill(C, C + n, T{0});
  for (std::size_t k = 0; k < K; ++k) {
    const T a = A[k * a_cs];
    const T* b = B + k * ldb;
    for (std::size_t j = 0; j < n; ++j) C[j] += a * b[j];
  }
}


template <typename T>
void gemm_impl(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t a_rs,
               std::size_t a_cs, const T* B, std::size_t ldb, T* C, std::size_t ldc, bool overwrite) {
  if (M == 0 || N == 0) return;
  if (K == 0) {
    if (overwrite)
      for (std::size_t i = 0; i < M; ++i) std::fill(C + i * ldc, C + i * ldc + N, T{0});
    return;
  }
  constexpr std::size_t NR = kVecsPerTile * kLanes<T>;
  const std::size_t full_cols = N - N % NR;
  // K is blocked so a KC x NR panel of B stays cache-resident across row
  // tiles; the per-element summation order is still k = 0, 1, ..., K-1.
  for (std::size_t k0 = 0; k0 < K; k0 += KC) {
    const std::size_t kc = std::min(KC, K - k0);
    const bool load_c = !(overwrite && k0 == 0);
    const T* Ak = A + k0 * a_cs;
    const T* Bk = B + k0 * ldb;
    for (std::size_t j0 = 0; j0 < full_cols; j0 += NR)
      for (std::size_t i0 = 0; i0 < M; i0 += kMaxRows)
        tile_dispatch(std::min(kMaxRows, M - i0), kc, Ak + i0 * a_rs, a_rs, a_cs, Bk + j0, ldb,
                      C + i0 * ldc + j0, ldc, load_c);
    if (full_cols < N) {
      for (std::size_t i = 0; i < M; ++i)
        row_kernel(N - full_cols, kc, Ak + i * a_rs, a_cs, Bk + full_cols, ldb,
                   C + i * ldc + full_cols, load_c);
    }
  }
}

// MR x NR block of dot products over contiguous rows of A and B.
template <typename T, std::size_t MR, std::size_t NR>
void dot_block(std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb, T* C,
               std::size_t ldc) {
  using V = Vec<T>;
  constexpr std::size_t L = kLanes<T>;
  V acc[MR][NR];
  for (std::size_t i = 0; i < MR; ++i)
    for (std::size_t j = 0; j < NR; ++j) acc[i][j] = V{};
  const std::size_t kv = K - K % L;
  for (std::size_t k = 0; k < kv; k += L) {
    V a[MR], b[NR];
    for (std::size_t i = 0; i < MR; ++i) a[i] = *reinterpret_cast<const V*>(A + i * lda + k);
    for (std::size_t j = 0; j < NR; ++j) b[j] = *reinterpret_cast<const V*>(B + j * ldb + k);
    for (std::size_t i = 0; i < MR; ++i)
      for (std::size_t j = 0; j < NR; ++j) acc[i][j] += a[i] * b[j];
  }
  for (std::size_t i = 0; i < MR; ++i)
    for (std::size_t j = 0; j < NR; ++j) {
      T sum = T{0};
      for (std::size_t l = 0; l < L; ++l) sum += acc[i][j][l];
      for (std::size_t k = kv; k < K; ++k) sum += A[i * lda + k] * B[j * ldb + k];
      C[i * ldc + j] += sum;
    }
}

template <typename T, std::size_t MR>
void dot_row_dispatch(std::size_t nr, std::size_t K, const T* A, std::size_t lda, const T* B,
                      std::size_t ldb, T* C, std::size_t ldc) {
  switch (nr) {
    case 4: dot_block<T, MR, 4>(K, A, lda, B, ldb, C, ldc); break;
    case 3: dot_block<T, MR, 3>(K, A, lda, B, ldb, C, ldc); break;
    case 2: dot_block<T, MR, 2>(K, A, lda, B, ldb, C, ldc); break;
    default: dot_block<T, MR, 1>(K, A, lda, B, ldb, C, ldc); break;
  }
}

}  // namespace

template <typename T>
void gemm_accumulate(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t a_rs,
                     std::size_t a_cs, const T* B, std::size_t ldb, T* C, std::size_t ldc) {
  gemm_impl(M, N, K, A, a_rs, a_cs, B, ldb, C, ldc, false);
}

template <typename T>
void gemm_overwrite(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t a_rs,
                    std::size_t a_cs, const T* B, std::size_t ldb, T* C, std::size_t ldc) {
  gemm_impl(M, N, K, A, a_rs, a_cs, B, ldb, C, ldc, true);
}

template <typename T>
void gemm_nt_accumulate(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda,
                        const T* B, std::size_t ldb, T* C, std::size_t ldc) {
  constexpr std::size_t kBlock = 4;
  // K slices keep the touched rows of A and B in L2; each slice's partial
  // dot products are added to C in slice order.
  constexpr std::size_t kSlice = 1024;
  for (std::size_t k0 = 0; k0 < K; k0 += kSlice) {
    const std::size_t kc = std::min(kSlice, K - k0);
    for (std::size_t i0 = 0; i0 < M; i0 += kBlock) {
      const std::size_t mr = std::min(kBlock, M - i0);
      for (std::size_t j0 = 0; j0 < N; j0 += kBlock) {
        const std::size_t nr = std::min(kBlock, N - j0);
        const T* a = A + i0 * lda + k0;
        const T* b = B + j0 * ldb + k0;
        T* c = C + i0 * ldc + j0;
        switch (mr) {
          case 4: dot_row_dispatch<T, 4>(nr, kc, a, lda, b, ldb, c, ldc); break;
          case 3: dot_row_dispatch<T, 3>(nr, kc, a, lda, b, ldb, c, ldc); break;
          case 2: dot_row_dispatch<T, 2>(nr, kc, a, lda, b, ldb, c, ldc); break;
          default: dot_row_dispatch<T, 1>(nr, kc, a, lda, b, ldb, c, ldc); break;
        }
      }
    }
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    const std::size_t r1 = std::min(rows, r0 + kBlock);
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t c1 = std::min(cols, c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) out[c * rows + r] = in[r * cols + c];
    }
  }
}

template void gemm_accumulate<float>(std::size_t, std::size_t, std::size_t, const float*,
                                     std::size_t, std::size_t, const float*, std::size_t, float*,
                                     std::size_t);
template void gemm_accumulate<double>(std::size_t, std::size_t, std::size_t, const double*,
                                      std::size_t, std::size_t, const double*, std::size_t,
                                      double*, std::size_t);
template void gemm_overwrite<float>(std::size_t, std::size_t, std::size_t, const float*,
                                    std::size_t, std::size_t, const float*, std::size_t, float*,
                                    std::size_t);
template void gemm_overwrite<double>(std::size_t, std::size_t, std::size_t, const double*,
                                     std::size_t, std::size_t, const double*, std::size_t,
                                     double*, std::size_t);
template void gemm_nt_accumulate<float>(std::size_t, std::size_t, std::size_t, const float*,
                                        std::size_t, const float*, std::size_t, float*, std::size_t);
template void gemm_nt_accumulate<double>(std::size_t, std::size_t, std::size_t, const double*,
                                         std::size_t, const double*, std::size_t, double*,
                                         std::size_t);
template void transpose<float>(std::size_t, std::size_t, const float*, float*);
template void transpose<double>(std::size_t, std::size_t, const double*, double*);

}  // namespace boolgan
