// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slim/error.hpp"

namespace slim {

namespace metrics {

double psnr(const Image& a, const Image& b, double peak) {
  if (!a.same_shape(b)) throw DimensionError("psnr: image shapes differ");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace {

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  const int half = kSsimWindow / 2;
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    g[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Valid-mode separable filter of one plane.
std::vector<double> filter_valid(const double* src, int h, int w, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1;
  const int ow = w - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * src[y * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < k; ++i) acc += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("ssim: image shapes differ");
  if (a.height < kSsimWindow || a.width < kSsimWindow) {
    throw DimensionError("ssim: image smaller than the 11x11 window");
  }
  const auto g = gaussian_window();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const int h = a.height;
  const int w = a.width;
  const std::size_t plane = a.plane();
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const double* pa = a.data.data() + c * plane;
    const double* pb = b.data.data() + c * plane;
    std::vector<double> aa(plane), bb(plane), ab(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, g);
    const auto mu_b = filter_valid(pb, h, w, g);
    const auto e_aa = filter_valid(aa.data(), h, w, g);
    const auto e_bb = filter_valid(bb.data(), h, w, g);
    const auto e_ab = filter_valid(ab.data(), h, w, g);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
      const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
      acc += num / den;
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / a.channels;
}

std::int64_t CostReport::flops_with_prefix(std::string_view prefix) const {
  std::int64_t total = 0;
  for (const auto& l : layers) {
    if (std::string_view(l.name).starts_with(prefix)) total += l.flops;
  }
  return total;
}

namespace {

void add_layer(CostReport& r, std::string name, std::int64_t flops, std::int64_t params) {
  r.layers.push_back({std::move(name), flops, params});
  r.flops += flops;
  r.params += params;
}

CostReport build(const ModelDesc& desc, int rho, int h, int w) {
  const ArchConfig& a = desc.arch;
  const int k = a.kernel;
  const int om = a.omega;
  CostReport r;
  add_layer(r, "encoder.conv_a", conv_flops(k, 3, a.c_de, h, w), conv_params(k, 3, a.c_de));
  add_layer(r, "encoder.conv_b", conv_flops(k, a.c_de, a.c_de, h, w), conv_params(k, a.c_de, a.c_de));
  add_layer(r, "encoder.conv_c", conv_flops(k, a.c_de, a.c_de, h, w), conv_params(k, a.c_de, a.c_de));
  // Task classifier only runs during training.
  add_layer(r, "encoder.classifier", 0, linear_params(a.c_de, a.num_tasks));
  add_layer(r, "head", conv_flops(k, 3, rho, h, w), conv_params(k, 3, om));
  add_layer(r, "transform", conv_flops(1, a.c_de, rho, h, w), conv_params(1, a.c_de, om, false));
  for (int b = 0; b < a.blocks; ++b) {
    const std::string p = "trunk." + std::to_string(b);
    add_layer(r, p + ".conv1", conv_flops(k, rho, rho, h, w), conv_params(k, om, om));
    add_layer(r, p + ".conv2", conv_flops(k, rho, rho, h, w), conv_params(k, om, om));
  }
  add_layer(r, "tail", conv_flops(k, rho, 3, h, w), conv_params(k, om, 3));
  if (desc.with_selector) {
    const int n = a.num_widths();
    add_layer(r, "selector.task.conv1", conv_flops(k, a.c_de, a.c_de, h, w), conv_params(k, a.c_de, a.c_de));
    add_layer(r, "selector.task.conv2", conv_flops(k, a.c_de, a.c_de, h, w), conv_params(k, a.c_de, a.c_de));
    add_layer(r, "selector.task.classifier", linear_flops(a.c_de, n), linear_params(a.c_de, n));
    add_layer(r, "selector.sample.gamma1", linear_flops(a.c_de, a.c_de), linear_params(a.c_de, a.c_de));
    add_layer(r, "selector.sample.gamma2", linear_flops(a.c_de, a.c_de), linear_params(a.c_de, a.c_de));
    add_layer(r, "selector.sample.classifier", linear_flops(a.c_de, n), linear_params(a.c_de, n));
  }
  return r;
}

}  // namespace

CostReport count_flops(const ModelDesc& desc, int rho, int height, int width) {
  if (rho < 1 || rho > desc.arch.omega) {
    throw WidthError("count_flops: width " + std::to_string(rho) + " outside (0," + std::to_string(desc.arch.omega) + "]");
  }
  return build(desc, rho, height, width);
}

std::int64_t count_params(const ModelDesc& desc) { return build(desc, desc.arch.omega, 1, 1).params; }

}  // namespace metrics
}  // namespace slim
