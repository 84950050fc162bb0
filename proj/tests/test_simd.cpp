// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <tuple>
#include <vector>

#include "slim/ops.hpp"
#include "slim/rng.hpp"
#include "slim/simd/kernels.hpp"

using namespace slim;
using simd::Isa;

namespace {

template <typename T>
std::vector<T> rand_vec(Rng& rng, std::size_t n) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
  return v;
}

template <typename T>
double tol() {
  return std::is_same_v<T, float> ? 1e-4 : 1e-12;
}

template <typename T>
double max_rel(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]) / (1.0 + std::abs(static_cast<double>(b[i]))));
  }
  return m;
}

class IsaGuard {
 public:
  IsaGuard() : saved_(simd::active_isa()) {}
  ~IsaGuard() { simd::set_active_isa(saved_); }

 private:
  Isa saved_;
};

// Shapes chosen to hit full microkernel tiles plus every row/column tail.
const std::vector<std::tuple<int, int, int>> kShapes = {
    {1, 1, 1}, {6, 16, 8}, {7, 17, 9}, {13, 5, 31}, {32, 40, 27}, {5, 3, 2}, {18, 81, 9}, {30, 1024, 270}};

template <typename T>
void check_gemms() {
  if (!simd::isa_available(Isa::kAvx2)) GTEST_SKIP() << "AVX2 not available on this CPU";
  const auto& ref = simd::scalar_kernels<T>();
  const auto& fast = simd::kernels_for<T>(Isa::kAvx2);
  Rng rng(42);
  for (auto [m, n, k] : kShapes) {
    // Padded leading dimensions exercise the strided paths used by slicing.
    const int lda = k + 3, ldb = n + 2, ldc = n + 1;
    const auto a = rand_vec<T>(rng, static_cast<std::size_t>(m) * lda);
    const auto b = rand_vec<T>(rng, static_cast<std::size_t>(k) * ldb);
    const auto c0 = rand_vec<T>(rng, static_cast<std::size_t>(m) * ldc);
    auto c_ref = c0, c_fast = c0;
    ref.gemm_nn(m, n, k, a.data(), lda, b.data(), ldb, c_ref.data(), ldc);
    fast.gemm_nn(m, n, k, a.data(), lda, b.data(), ldb, c_fast.data(), ldc);
    EXPECT_LT(max_rel(c_fast, c_ref), tol<T>()) << "gemm_nn " << m << "x" << n << "x" << k;

    const int lda_t = m + 2;
    const auto at = rand_vec<T>(rng, static_cast<std::size_t>(k) * lda_t);
    c_ref = c0;
    c_fast = c0;
    ref.gemm_tn(m, n, k, at.data(), lda_t, b.data(), ldb, c_ref.data(), ldc);
    fast.gemm_tn(m, n, k, at.data(), lda_t, b.data(), ldb, c_fast.data(), ldc);
    EXPECT_LT(max_rel(c_fast, c_ref), tol<T>()) << "gemm_tn " << m << "x" << n << "x" << k;

    const int ldb_t = k + 1;
    const auto bt = rand_vec<T>(rng, static_cast<std::size_t>(n) * ldb_t);
    c_ref = c0;
    c_fast = c0;
    ref.gemm_nt(m, n, k, a.data(), lda, bt.data(), ldb_t, c_ref.data(), ldc);
    fast.gemm_nt(m, n, k, a.data(), lda, bt.data(), ldb_t, c_fast.data(), ldc);
    EXPECT_LT(max_rel(c_fast, c_ref), tol<T>()) << "gemm_nt " << m << "x" << n << "x" << k;
  }
}

}  // namespace

TEST(Simd, GemmFloatMatchesScalar) { check_gemms<float>(); }
TEST(Simd, GemmDoubleMatchesScalar) { check_gemms<double>(); }

TEST(Simd, AxpyAndSumMatchScalar) {
  if (!simd::isa_available(Isa::kAvx2)) GTEST_SKIP() << "AVX2 not available on this CPU";
  Rng rng(3);
  for (int n : {0, 1, 7, 8, 9, 31, 64, 1000}) {
    const auto x = rand_vec<double>(rng, static_cast<std::size_t>(n));
    auto y_ref = rand_vec<double>(rng, static_cast<std::size_t>(n));
    auto y_fast = y_ref;
    simd::scalar_kernels<double>().axpy(n, 0.37, x.data(), y_ref.data());
    simd::kernels_for<double>(Isa::kAvx2).axpy(n, 0.37, x.data(), y_fast.data());
    EXPECT_LT(max_rel(y_fast, y_ref), 1e-14);
    const double s_ref = simd::scalar_kernels<double>().sum(n, x.data());
    const double s_fast = simd::kernels_for<double>(Isa::kAvx2).sum(n, x.data());
    EXPECT_NEAR(s_fast, s_ref, 1e-12);

    const auto xf = rand_vec<float>(rng, static_cast<std::size_t>(n));
    EXPECT_NEAR(simd::kernels_for<float>(Isa::kAvx2).sum(n, xf.data()),
                simd::scalar_kernels<float>().sum(n, xf.data()), 1e-3);
  }
}

TEST(Simd, ScalarIsAlwaysAvailable) {
  EXPECT_TRUE(simd::isa_available(Isa::kScalar));
  EXPECT_EQ(simd::isa_name(Isa::kScalar), "scalar");
}

TEST(Simd, ConvForwardAndBackwardAgreeAcrossIsas) {
  if (!simd::isa_available(Isa::kAvx2)) GTEST_SKIP() << "AVX2 not available on this CPU";
  IsaGuard guard;
  Rng rng(9);
  auto run = [&](Isa isa, std::vector<double>& out, std::vector<double>& gw) {
    simd::set_active_isa(isa);
    Rng r(17);
    auto x = Tensor<double>::from({2, 5, 9, 9}, rand_vec<double>(r, 2 * 5 * 81), true);
    auto w = Tensor<double>::from({7, 6, 3, 3}, rand_vec<double>(r, 7 * 6 * 9), true);
    auto b = Tensor<double>::from({7}, rand_vec<double>(r, 7), true);
    Tape<double> tape;
    auto y = ops::conv2d_sliced(&tape, x, w, b, 5, 6);
    tape.backward(ops::sum(&tape, ops::square(&tape, y)));
    out.assign(y.data().begin(), y.data().end());
    gw.assign(w.grad().begin(), w.grad().end());
  };
  std::vector<double> y_ref, g_ref, y_fast, g_fast;
  run(Isa::kScalar, y_ref, g_ref);
  run(Isa::kAvx2, y_fast, g_fast);
  EXPECT_LT(max_rel(y_fast, y_ref), 1e-12);
  EXPECT_LT(max_rel(g_fast, g_ref), 1e-12);
}

TEST(Simd, SameIsaIsBitReproducible) {
  Rng rng(5);
  const auto a = rand_vec<float>(rng, 30 * 270);
  const auto b = rand_vec<float>(rng, 270 * 1024);
  std::vector<float> c1(30 * 1024, 0.f), c2(30 * 1024, 0.f);
  simd::kernels<float>().gemm_nn(30, 1024, 270, a.data(), 270, b.data(), 1024, c1.data(), 1024);
  simd::kernels<float>().gemm_nn(30, 1024, 270, a.data(), 270, b.data(), 1024, c2.data(), 1024);
  EXPECT_EQ(c1, c2);
}
