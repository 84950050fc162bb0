// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

// AVX2 + FMA kernels. Compiled with -mavx2 -mfma; only reached through the
// dispatch table after a CPU feature check.

#include <immintrin.h>

#include "slim/simd/kernels.hpp"

namespace slim::simd {
namespace {

struct VecF {
  using T = float;
  using V = __m256;
  static constexpr int kLanes = 8;
  static V zero() { return _mm256_setzero_ps(); }
  static V load(const T* p) { return _mm256_loadu_ps(p); }
  static void store(T* p, V v) { _mm256_storeu_ps(p, v); }
  static V set1(T x) { return _mm256_set1_ps(x); }
  static V add(V a, V b) { return _mm256_add_ps(a, b); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_ps(a, b, c); }
  static T hsum(V v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehdup_ps(lo);
    __m128 s = _mm_add_ps(lo, sh);
    sh = _mm_movehl_ps(sh, s);
    s = _mm_add_ss(s, sh);
    return _mm_cvtss_f32(s);
  }
};

struct VecD {
  using T = double;
  using V = __m256d;
  static constexpr int kLanes = 4;
  static V zero() { return _mm256_setzero_pd(); }
  static V load(const T* p) { return _mm256_loadu_pd(p); }
  static void store(T* p, V v) { _mm256_storeu_pd(p, v); }
  static V set1(T x) { return _mm256_set1_pd(x); }
  static V add(V a, V b) { return _mm256_add_pd(a, b); }
  static V fmadd(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
  static T hsum(V v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d h = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, h));
  }
};

constexpr int kMr = 6;

// One MR x (2*lanes) tile of C. TransA selects A[i][p] = a[p*lda + i].
template <class Vt, int MR, bool TransA>
inline void tile(int k, const typename Vt::T* a, int lda, const typename Vt::T* b, int ldb,
                 typename Vt::T* c, int ldc) {
  using V = typename Vt::V;
  constexpr int L = Vt::kLanes;
  V acc0[MR];
  V acc1[MR];
  for (int r = 0; r < MR; ++r) {
    acc0[r] = Vt::zero();
    acc1[r] = Vt::zero();
  }
  for (int p = 0; p < k; ++p) {
    const auto* brow = b + static_cast<long>(p) * ldb;
    const V b0 = Vt::load(brow);
    const V b1 = Vt::load(brow + L);
    for (int r = 0; r < MR; ++r) {
      const auto av = TransA ? a[static_cast<long>(p) * lda + r] : a[static_cast<long>(r) * lda + p];
      const V vb = Vt::set1(av);
      acc0[r] = Vt::fmadd(vb, b0, acc0[r]);
      acc1[r] = Vt::fmadd(vb, b1, acc1[r]);
    }
  }
  for (int r = 0; r < MR; ++r) {
    auto* crow = c + static_cast<long>(r) * ldc;
    Vt::store(crow, Vt::add(Vt::load(crow), acc0[r]));
    Vt::store(crow + L, Vt::add(Vt::load(crow + L), acc1[r]));
  }
}

template <class Vt, bool TransA>
void tile_rows(int rows, int k, const typename Vt::T* a, int lda, const typename Vt::T* b, int ldb,
               typename Vt::T* c, int ldc) {
  switch (rows) {
    case 6: tile<Vt, 6, TransA>(k, a, lda, b, ldb, c, ldc); break;
    case 5: tile<Vt, 5, TransA>(k, a, lda, b, ldb, c, ldc); break;
    case 4: tile<Vt, 4, TransA>(k, a, lda, b, ldb, c, ldc); break;
    case 3: tile<Vt, 3, TransA>(k, a, lda, b, ldb, c, ldc); break;
    case 2: tile<Vt, 2, TransA>(k, a, lda, b, ldb, c, ldc); break;
    case 1: tile<Vt, 1, TransA>(k, a, lda, b, ldb, c, ldc); break;
    default: break;
  }
}

template <class Vt, bool TransA>
void gemm_xn(int m, int n, int k, const typename Vt::T* a, int lda, const typename Vt::T* b, int ldb,
             typename Vt::T* c, int ldc) {
  using T = typename Vt::T;
  constexpr int nr = 2 * Vt::kLanes;
  const int nfull = n - n % nr;
  // Column panels outermost so the k x nr slab of B stays hot in L1 across
  // every row block.
  for (int j = 0; j < nfull; j += nr) {
    for (int i = 0; i < m; i += kMr) {
      const int rows = (m - i < kMr) ? m - i : kMr;
      const T* ablk = TransA ? a + i : a + static_cast<long>(i) * lda;
      tile_rows<Vt, TransA>(rows, k, ablk, lda, b + j, ldb, c + static_cast<long>(i) * ldc + j, ldc);
    }
  }
  if (nfull == n) return;
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<long>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T av = TransA ? a[static_cast<long>(p) * lda + i] : a[static_cast<long>(i) * lda + p];
      const T* brow = b + static_cast<long>(p) * ldb;
      for (int j = nfull; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class Vt>
void gemm_nn(int m, int n, int k, const typename Vt::T* a, int lda, const typename Vt::T* b, int ldb,
             typename Vt::T* c, int ldc) {
  gemm_xn<Vt, false>(m, n, k, a, lda, b, ldb, c, ldc);
}

template <class Vt>
void gemm_tn(int m, int n, int k, const typename Vt::T* a, int lda, const typename Vt::T* b, int ldb,
             typename Vt::T* c, int ldc) {
  gemm_xn<Vt, true>(m, n, k, a, lda, b, ldb, c, ldc);
}

// Dot-product form: each C entry is a reduction along k over two contiguous
// rows. Tiles of 2 x 4 entries share the loads.
template <class Vt>
void gemm_nt(int m, int n, int k, const typename Vt::T* a, int lda, const typename Vt::T* b, int ldb,
             typename Vt::T* c, int ldc) {
  using T = typename Vt::T;
  using V = typename Vt::V;
  constexpr int L = Vt::kLanes;
  const int kfull = k - k % L;

  auto dot_tail = [&](const T* x, const T* y) {
    T s = 0;
    for (int p = kfull; p < k; ++p) s += x[p] * y[p];
    return s;
  };

  int i = 0;
  for (; i + 2 <= m; i += 2) {
    const T* a0 = a + static_cast<long>(i) * lda;
    const T* a1 = a0 + lda;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const T* bj[4];
      for (int q = 0; q < 4; ++q) bj[q] = b + static_cast<long>(j + q) * ldb;
      V acc[2][4];
      for (int q = 0; q < 4; ++q) {
        acc[0][q] = Vt::zero();
        acc[1][q] = Vt::zero();
      }
      for (int p = 0; p < kfull; p += L) {
        const V x0 = Vt::load(a0 + p);
        const V x1 = Vt::load(a1 + p);
        for (int q = 0; q < 4; ++q) {
          const V y = Vt::load(bj[q] + p);
          acc[0][q] = Vt::fmadd(x0, y, acc[0][q]);
          acc[1][q] = Vt::fmadd(x1, y, acc[1][q]);
        }
      }
      for (int q = 0; q < 4; ++q) {
        c[static_cast<long>(i) * ldc + j + q] += Vt::hsum(acc[0][q]) + dot_tail(a0, bj[q]);
        c[static_cast<long>(i + 1) * ldc + j + q] += Vt::hsum(acc[1][q]) + dot_tail(a1, bj[q]);
      }
    }
    for (; j < n; ++j) {
      const T* y = b + static_cast<long>(j) * ldb;
      V s0 = Vt::zero();
      V s1 = Vt::zero();
      for (int p = 0; p < kfull; p += L) {
        const V yv = Vt::load(y + p);
        s0 = Vt::fmadd(Vt::load(a0 + p), yv, s0);
        s1 = Vt::fmadd(Vt::load(a1 + p), yv, s1);
      }
      c[static_cast<long>(i) * ldc + j] += Vt::hsum(s0) + dot_tail(a0, y);
      c[static_cast<long>(i + 1) * ldc + j] += Vt::hsum(s1) + dot_tail(a1, y);
    }
  }
  for (; i < m; ++i) {
    const T* x = a + static_cast<long>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const T* y = b + static_cast<long>(j) * ldb;
      V s = Vt::zero();
      for (int p = 0; p < kfull; p += L) s = Vt::fmadd(Vt::load(x + p), Vt::load(y + p), s);
      c[static_cast<long>(i) * ldc + j] += Vt::hsum(s) + dot_tail(x, y);
    }
  }
}

template <class Vt>
void axpy(int n, typename Vt::T alpha, const typename Vt::T* x, typename Vt::T* y) {
  constexpr int L = Vt::kLanes;
  const auto va = Vt::set1(alpha);
  int i = 0;
  for (; i + L <= n; i += L) Vt::store(y + i, Vt::fmadd(va, Vt::load(x + i), Vt::load(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

template <class Vt>
typename Vt::T sum(int n, const typename Vt::T* x) {
  constexpr int L = Vt::kLanes;
  auto acc = Vt::zero();
  int i = 0;
  for (; i + L <= n; i += L) acc = Vt::add(acc, Vt::load(x + i));
  typename Vt::T s = Vt::hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

template <class Vt>
const Kernels<typename Vt::T>& table() {
  static const Kernels<typename Vt::T> t{&gemm_nn<Vt>, &gemm_tn<Vt>, &gemm_nt<Vt>, &axpy<Vt>, &sum<Vt>};
  return t;
}

}  // namespace

template <>
const Kernels<float>& avx2_kernels<float>() {
  return table<VecF>();
}

template <>
const Kernels<double>& avx2_kernels<double>() {
  return table<VecD>();
}

}  // namespace slim::simd
