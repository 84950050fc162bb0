// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "slim/tensor.hpp"

namespace slim {

/// Planar C x H x W image in double precision.
struct Image {
  int channels = 3;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

Image clamp01(const Image& img);
double max_abs_diff(const Image& a, const Image& b);
/// Fraction of pixel positions (over H x W) where any channel has |v| > threshold.
double support_fraction(const Image& img, double threshold = 1e-9);

/// Packs images into a [B,C,H,W] tensor (all must share a shape).
template <typename T>
Tensor<T> to_tensor(const std::vector<const Image*>& images);
/// Extracts sample b of a [B,C,H,W] tensor.
template <typename T>
Image from_tensor(const Tensor<T>& t, int b);

}  // namespace slim
