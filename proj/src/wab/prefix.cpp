// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slim/error.hpp"
#include "slim/ops.hpp"
#include "slim/wab.hpp"

namespace slim::wab {
namespace {

using TD = Tensor<double>;

TD weight_block(const TD& w, int o1, int i0, int i1) {
  const int in = w.dim(1);
  const int kk = w.dim(2) * w.dim(3);
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(o1) * (i1 - i0) * kk);
  for (int a = 0; a < o1; ++a) {
    const double* src = w.ptr() + (static_cast<std::size_t>(a) * in + i0) * kk;
    v.insert(v.end(), src, src + static_cast<std::size_t>(i1 - i0) * kk);
  }
  return TD::from({o1, i1 - i0, w.dim(2), w.dim(3)}, std::move(v));
}

TD channels(const TD& x, int c0, int c1) {
  const int c = x.dim(1);
  const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
  std::vector<double> v;
  for (int n = 0; n < x.dim(0); ++n) {
    const double* src = x.ptr() + (static_cast<std::size_t>(n) * c + c0) * plane;
    v.insert(v.end(), src, src + static_cast<std::size_t>(c1 - c0) * plane);
  }
  return TD::from({x.dim(0), c1 - c0, x.dim(2), x.dim(3)}, std::move(v));
}

}  // namespace

double PrefixReport::max_deviation() const {
  double m = 0.0;
  for (const auto& l : layers) m = std::max(m, l.max_deviation);
  return m;
}

PrefixReport check_prefix_decomposition(const std::vector<WidthAdaptiveConv<double>>& layers, const TD& input,
                                        int rho1, int rho2, const std::vector<WidthAdaptiveConv<double>>* reference) {
  if (!reference) reference = &layers;
  if (reference->size() != layers.size()) throw DimensionError("prefix check: reference stack has a different depth");
  if (rho1 < 1 || rho1 > rho2) throw WidthError("prefix check needs 0 < rho1 <= rho2");
  if (input.rank() != 4 || input.dim(1) < rho2) throw DimensionError("prefix check: input needs at least rho2 channels");

  PrefixReport report;
  TD narrow = channels(input, 0, rho1);
  TD wide = channels(input, 0, rho2);
  TD remainder = TD::zeros({input.dim(0), rho1, input.dim(2), input.dim(3)});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& ref = (*reference)[l].weight;
    const int pad = ref.dim(2) / 2;
    TD carried = ops::conv2d<double>(nullptr, remainder, weight_block(ref, rho1, 0, rho1), TD{}, pad);
    if (rho2 > rho1) {
      const auto cross = ops::conv2d<double>(nullptr, channels(wide, rho1, rho2), weight_block(ref, rho1, rho1, rho2),
                                             TD{}, pad);
      carried = ops::add<double>(nullptr, carried, cross);
    }
    remainder = carried;

    narrow = layers[l](nullptr, narrow, rho1, rho1);
    wide = layers[l](nullptr, wide, rho2, rho2);
    const TD head = channels(wide, 0, rho1);
    PrefixLayerCheck c;
    c.layer = static_cast<int>(l);
    for (std::size_t i = 0; i < head.numel(); ++i) {
      c.max_deviation = std::max(c.max_deviation, std::abs(head.data()[i] - (narrow.data()[i] + remainder.data()[i])));
      c.remainder_norm = std::max(c.remainder_norm, std::abs(remainder.data()[i]));
    }
    report.layers.push_back(c);
  }
  return report;
}

PrefixReport verify_prefix_decomposition(const std::vector<WidthAdaptiveConv<double>>& layers, const TD& input,
                                         int rho1, int rho2) {
  auto report = check_prefix_decomposition(layers, input, rho1, rho2);
  for (const auto& l : report.layers) {
    if (!(l.max_deviation < kPrefixTolerance)) {
      std::ostringstream msg;
      msg << "prefix decomposition fails at layer " << l.layer << ": deviation " << l.max_deviation;
      throw VerificationError(msg.str());
    }
  }
  return report;
}

}  // namespace slim::wab
