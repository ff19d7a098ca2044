// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace boolgan {

/// C[M x N] += A[M x K] * B[K x N].
///
/// A is addressed as A[i * a_row_stride + k * a_col_stride], which covers
/// both A and A^T without a copy. B and C are row-major with leading
/// dimensions ldb and ldc. Every C element accumulates its K products in
/// strictly increasing k order, so results do not depend on blocking.
template <typename T>
void gemm_accumulate(std::size_t M, std::size_t N, std::size_t K, const T* A,
                     std::size_t a_row_stride, std::size_t a_col_stride, const T* B,
                     std::size_t ldb, T* C, std::size_t ldc);

/// C = A * B with the same addressing; C's prior contents are ignored.
template <typename T>
void gemm_overwrite(std::size_t M, std::size_t N, std::size_t K, const T* A,
                    std::size_t a_row_stride, std::size_t a_col_stride, const T* B,
                    std::size_t ldb, T* C, std::size_t ldc);

/// C[M x N] += A[M x K] * B[N x K]^T with A and B row-major (lda, ldb).
/// Meant for long K (weight gradients summed over every output pixel): each
/// C element is a lane-split dot product reduced in a fixed order, so the
/// result is deterministic but not the strict k-order sum.
template <typename T>
void gemm_nt_accumulate(std::size_t M, std::size_t N, std::size_t K, const T* A,
                        std::size_t lda, const T* B, std::size_t ldb, T* C, std::size_t ldc);

/// out[cols x rows] = in[rows x cols]^T
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* in, T* out);

}  // namespace boolgan
