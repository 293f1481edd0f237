#pragma once

#include <algorithm>
#include <cstddef>

// Row-major accumulate-into kernels built on one register-blocked micro
// kernel. Edge tiles are zero-padded and run through the same kernel, so every
// output element is summed in the same order regardless of its position or
// the matrix sizes. Results therefore do not depend on batch size.

namespace ecgnet::nn {

namespace detail {

inline constexpr std::size_t kMR = 4;
inline constexpr std::size_t kNR = 8;
inline constexpr std::size_t kKC = 256;

// acc[r][j] = sum_p A(r, p) * B(p, j) over p in [0, k).
template <typename T>
void micro_tile(const T* a, std::size_t a_row, std::size_t a_col, const T* b, std::size_t ldb, std::size_t k,
                T (&acc)[kMR][kNR]) {
  for (std::size_t r = 0; r < kMR; ++r)
    for (std::size_t j = 0; j < kNR; ++j) acc[r][j] = T{0};
  for (std::size_t p = 0; p < k; ++p) {
    const T* bp = b + p * ldb;
    for (std::size_t r = 0; r < kMR; ++r) {
      const T av = a[r * a_row + p * a_col];
      for (std::size_t j = 0; j < kNR; ++j) acc[r][j] += av * bp[j];
    }
  }
}

// C[M,N] += A * B[K,N] for one K panel, A(i, p) = a[i * a_row + p * a_col].
template <typename T>
void gemm_panel(const T* a, std::size_t a_row, std::size_t a_col, const T* b, std::size_t ldb, T* c,
                std::size_t m, std::size_t k, std::size_t n) {
  T acc[kMR][kNR];
  T apad[kMR * kKC];
  T bpad[kKC * kNR];
  for (std::size_t i0 = 0; i0 < m; i0 += kMR) {
    const std::size_t mr = std::min(kMR, m - i0);
    const T* ablock = a + i0 * a_row;
    std::size_t ar = a_row, ac = a_col;
    if (mr < kMR) {
      for (std::size_t r = 0; r < kMR; ++r)
        for (std::size_t p = 0; p < k; ++p) apad[r * k + p] = r < mr ? a[(i0 + r) * a_row + p * a_col] : T{0};
      ablock = apad;
      ar = k;
      ac = 1;
    }
    for (std::size_t j0 = 0; j0 < n; j0 += kNR) {
      const std::size_t nr = std::min(kNR, n - j0);
      if (nr == kNR) {
        micro_tile(ablock, ar, ac, b + j0, ldb, k, acc);
      } else {
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < kNR; ++j) bpad[p * kNR + j] = j < nr ? b[p * ldb + j0 + j] : T{0};
        micro_tile(ablock, ar, ac, bpad, kNR, k, acc);
      }
      for (std::size_t r = 0; r < mr; ++r)
        for (std::size_t j = 0; j < nr; ++j) c[(i0 + r) * n + j0 + j] += acc[r][j];
    }
  }
}

template <typename T>
void gemm_blocked(const T* a, std::size_t a_row, std::size_t a_col, const T* b, T* c, std::size_t m,
                  std::size_t k, std::size_t n) {
  for (std::size_t p0 = 0; p0 < k; p0 += kKC) {
    gemm_panel(a + p0 * a_col, a_row, a_col, b + p0 * n, n, c, m, std::min(kKC, k - p0), n);
  }
}

}  // namespace detail

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  detail::gemm_blocked(a, k, 1, b, c, m, k, n);
}

// C[M,N] += A[K,M]^T * B[K,N]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  detail::gemm_blocked(a, 1, m, b, c, m, k, n);
}

// out[N,M] = in[M,N]^T
template <typename T>
void transpose(const T* in, T* out, std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
}

}  // namespace ecgnet::nn
