// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used as test oracles. Written as
// plain loops with no shared code paths into the library under test.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "slim/image.hpp"
#include "slim/rng.hpp"
#include "slim/tensor.hpp"

namespace oracle {

using slim::Tensor;
using TD = Tensor<double>;

inline TD random(slim::Rng& rng, const slim::Shape& shape, double lo = -1.0, double hi = 1.0, bool grad = false) {
  std::vector<double> v(slim::shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return TD::from(shape, std::move(v), grad);
}

/// Same-padding stride-1 cross-correlation, direct loops.
inline std::vector<double> conv(const std::vector<double>& x, int b, int cin, int h, int w,
                                const std::vector<double>& wt, int cout, int k, const std::vector<double>& bias) {
  const int pad = k / 2;
  std::vector<double> out(static_cast<std::size_t>(b) * cout * h * w, 0.0);
  for (int n = 0; n < b; ++n)
    for (int o = 0; o < cout; ++o)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (int c = 0; c < cin; ++c)
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx) {
                const int iy = y + dy - pad, ix = xx + dx - pad;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += x[((static_cast<std::size_t>(n) * cin + c) * h + iy) * w + ix] *
                       wt[((static_cast<std::size_t>(o) * cin + c) * k + dy) * k + dx];
              }
          out[((static_cast<std::size_t>(n) * cout + o) * h + y) * w + xx] = acc;
        }
  return out;
}

inline std::vector<double> matmul_bt(const std::vector<double>& x, int b, int din, const std::vector<double>& w,
                                     int dout, const std::vector<double>& bias) {
  std::vector<double> out(static_cast<std::size_t>(b) * dout);
  for (int i = 0; i < b; ++i)
    for (int o = 0; o < dout; ++o) {
      double acc = bias[o];
      for (int d = 0; d < din; ++d) acc += x[i * din + d] * w[o * din + d];
      out[i * dout + o] = acc;
    }
  return out;
}

/// Central-difference gradient of a scalar function of a tensor's values.
inline std::vector<double> numeric_grad(const TD& t, const std::function<double()>& f, double h = 1e-5) {
  std::vector<double> g(t.numel());
  auto v = t.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double p = f();
    v[i] = keep - h;
    const double m = f();
    v[i] = keep;
    g[i] = (p - m) / (2 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double s = std::sqrt(std::max(na, nb));
  return s < 1e-12 ? 0.0 : std::sqrt(d) / s;
}

/// SSIM by explicit per-window double loops over every valid window.
inline double ssim(const slim::Image& a, const slim::Image& b) {
  constexpr int win = 11;
  constexpr double sigma = 1.5;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double g[win][win];
  double gs = 0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      const double dy = y - 5, dx = x - 5;
      g[y][x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      gs += g[y][x];
    }
  double total = 0;
  int count = 0;
  for (int c = 0; c < a.channels; ++c) {
    double ch = 0;
    int nwin = 0;
    for (int y0 = 0; y0 + win <= a.height; ++y0)
      for (int x0 = 0; x0 + win <= a.width; ++x0) {
        double ma = 0, mb = 0;
        for (int y = 0; y < win; ++y)
          for (int x = 0; x < win; ++x) {
            const double wgt = g[y][x] / gs;
            ma += wgt * a.at(c, y0 + y, x0 + x);
            mb += wgt * b.at(c, y0 + y, x0 + x);
          }
        double va = 0, vb = 0, cov = 0;
        for (int y = 0; y < win; ++y)
          for (int x = 0; x < win; ++x) {
            const double wgt = g[y][x] / gs;
            const double da = a.at(c, y0 + y, x0 + x) - ma, db = b.at(c, y0 + y, x0 + x) - mb;
            va += wgt * da * da;
            vb += wgt * db * db;
            cov += wgt * da * db;
          }
        ch += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++nwin;
      }
    total += ch / nwin;
    ++count;
  }
  return total / count;
}

}  // namespace oracle
