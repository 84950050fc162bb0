// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Plain loops in a fixed order; the AVX2 variants are
// tested against these.

#include "slim/simd/kernels.hpp"

namespace slim::simd {
namespace {

template <typename T>
void gemm_nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<long>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<long>(i) * lda + p];
      const T* brow = b + static_cast<long>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<long>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const T av = a[static_cast<long>(p) * lda + i];
      const T* brow = b + static_cast<long>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<long>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<long>(j) * ldb;
      T acc = 0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[static_cast<long>(i) * ldc + j] += acc;
    }
  }
}

template <typename T>
void axpy(int n, T alpha, const T* x, T* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T sum(int n, const T* x) {
  T acc = 0;
  for (int i = 0; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace

template <typename T>
const Kernels<T>& scalar_kernels() {
  static const Kernels<T> table{&gemm_nn<T>, &gemm_tn<T>, &gemm_nt<T>, &axpy<T>, &sum<T>};
  return table;
}

template const Kernels<float>& scalar_kernels<float>();
template const Kernels<double>& scalar_kernels<double>();

}  // namespace slim::simd
