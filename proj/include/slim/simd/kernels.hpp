// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace slim::simd {

enum class Isa { kScalar, kAvx2 };

/// Dense inner loops used by the convolution and linear ops. All matrices are
/// row-major with explicit leading dimensions, and every kernel accumulates
/// into C (C += ...). The summation order for a given Isa is fixed, so results
/// are reproducible run to run.
template <typename T>
struct Kernels {
  // C[m x n] += A[m x k] * B[k x n]
  void (*gemm_nn)(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);
  // C[m x n] += A^T * B, A stored k x m
  void (*gemm_tn)(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);
  // C[m x n] += A * B^T, B stored n x k
  void (*gemm_nt)(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc);
  // y += alpha * x
  void (*axpy)(int n, T alpha, const T* x, T* y);
  // sum of x, fixed order
  T (*sum)(int n, const T* x);
};

template <typename T>
const Kernels<T>& scalar_kernels();

#ifdef SLIM_HAVE_AVX2
template <typename T>
const Kernels<T>& avx2_kernels();
#endif

/// True when the ISA was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// ISA used by kernels<T>(). Chosen once from CPU features; the environment
/// variable SLIM_ISA=scalar|avx2 overrides the choice.
Isa active_isa();

/// Forces an ISA for the whole process. Throws slim::Error if unavailable.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

template <typename T>
const Kernels<T>& kernels_for(Isa isa);

template <typename T>
const Kernels<T>& kernels() {
  return kernels_for<T>(active_isa());
}

}  // namespace slim::simd
