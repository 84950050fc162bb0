// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "slim/arch.hpp"
#include "slim/image.hpp"

namespace slim::metrics {

inline constexpr double kPsnrCap = 100.0;

/// 10*log10(peak^2 / MSE); identical images give kPsnrCap.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean SSIM over all valid 11x11 Gaussian windows (sigma 1.5, K1 0.01,
/// K2 0.03, range 1), computed per channel and averaged.
double ssim(const Image& a, const Image& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

struct LayerCost {
  std::string name;
  std::int64_t flops = 0;
  std::int64_t params = 0;
};

/// FLOPs count 1 MAC as 2; activations, additions and biases are free.
struct CostReport {
  std::int64_t flops = 0;
  std::int64_t params = 0;
  std::vector<LayerCost> layers;

  /// Sum over layers whose name starts with prefix.
  std::int64_t flops_with_prefix(std::string_view prefix) const;
};

constexpr std::int64_t conv_flops(int k, int cin, int cout, int h, int w) {
  return 2LL * k * k * cin * cout * h * w;
}
constexpr std::int64_t conv_params(int k, int cin, int cout, bool bias = true) {
  return static_cast<std::int64_t>(k) * k * cin * cout + (bias ? cout : 0);
}
constexpr std::int64_t linear_flops(int din, int dout) { return 2LL * din * dout; }
constexpr std::int64_t linear_params(int din, int dout) { return static_cast<std::int64_t>(din) * dout + dout; }

/// What to count: the backbone alone or backbone plus selector.
struct ModelDesc {
  ArchConfig arch;
  bool with_selector = false;
};

/// Cost of one inference pass on an H x W image at width rho. Stored
/// parameters are counted at full size regardless of rho.
CostReport count_flops(const ModelDesc& desc, int rho, int height, int width);

/// Total stored parameters; independent of any evaluation width.
std::int64_t count_params(const ModelDesc& desc);

}  // namespace slim::metrics
