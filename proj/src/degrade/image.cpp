// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/image.hpp"

#include <algorithm>
#include <cmath>

#include "slim/error.hpp"

namespace slim {

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

double max_abs_diff(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: image shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

double support_fraction(const Image& img, double threshold) {
  const std::size_t plane = img.plane();
  std::size_t hits = 0;
  for (std::size_t p = 0; p < plane; ++p) {
    for (int c = 0; c < img.channels; ++c) {
      if (std::abs(img.data[c * plane + p]) > threshold) {
        ++hits;
        break;
      }
    }
  }
  return plane == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(plane);
}

template <typename T>
Tensor<T> to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw DimensionError("to_tensor: no images");
  const Image& first = *images.front();
  auto out = Tensor<T>::zeros({static_cast<int>(images.size()), first.channels, first.height, first.width});
  T* dst = out.ptr();
  for (const Image* img : images) {
    if (!img->same_shape(first)) throw DimensionError("to_tensor: images differ in shape");
    dst = std::transform(img->data.begin(), img->data.end(), dst, [](double v) { return static_cast<T>(v); });
  }
  return out;
}

template <typename T>
Image from_tensor(const Tensor<T>& t, int b) {
  if (t.rank() != 4 || b < 0 || b >= t.dim(0)) throw DimensionError("from_tensor: bad tensor/index");
  Image img(t.dim(1), t.dim(2), t.dim(3));
  const T* src = t.ptr() + static_cast<long>(b) * img.size();
  std::transform(src, src + img.size(), img.data.begin(), [](T v) { return static_cast<double>(v); });
  return img;
}

template Tensor<float> to_tensor<float>(const std::vector<const Image*>&);
template Tensor<double> to_tensor<double>(const std::vector<const Image*>&);
template Image from_tensor<float>(const Tensor<float>&, int);
template Image from_tensor<double>(const Tensor<double>&, int);

}  // namespace slim
