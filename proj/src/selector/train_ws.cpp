// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slim/adam.hpp"
#include "slim/error.hpp"
#include "slim/ops.hpp"
#include "slim/selector.hpp"

namespace slim::selector {
namespace {

constexpr std::uint64_t kInitStream = 21;
constexpr std::uint64_t kShuffleStream = 22;

}  // namespace

FrozenFeatures extract_frozen_features(const wab::WabModel<float>& wab, const SampleSet& data, int batch) {
  if (data.empty()) throw ConfigError("selector training set is empty");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  const ArchConfig& arch = wab.arch();
  const auto widths = arch.widths();
  const std::size_t n = widths.size();

  FrozenFeatures ff;
  ff.channels = arch.c_de;
  ff.height = data.front().degraded.height;
  ff.width = data.front().degraded.width;
  const std::size_t per = static_cast<std::size_t>(ff.channels) * ff.height * ff.width;
  ff.f_de.resize(per * data.size());
  ff.per_width_l1.resize(n * data.size());
  ff.labels.reserve(data.size());
  for (const auto& s : data) {
    if (s.label < 0 || s.label >= arch.num_tasks) throw ConfigError("sample label out of range");
    ff.labels.push_back(s.label);
  }

  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch));
    std::vector<const Image*> deg;
    std::vector<const Image*> cln;
    for (std::size_t i = start; i < end; ++i) {
      deg.push_back(&data[i].degraded);
      cln.push_back(&data[i].clean);
    }
    const auto x = to_tensor<float>(deg);
    const auto y = to_tensor<float>(cln);
    const auto f_de = wab.encode(nullptr, x);
    std::copy(f_de.data().begin(), f_de.data().end(), ff.f_de.begin() + static_cast<long>(start * per));

    const std::size_t img = y.numel() / (end - start);
    for (std::size_t wi = 0; wi < n; ++wi) {
      const auto out = wab.restore(nullptr, x, f_de, widths[wi]);
      for (std::size_t j = 0; j < end - start; ++j) {
        const float* a = out.ptr() + j * img;
        const float* b = y.ptr() + j * img;
        double acc = 0.0;
        for (std::size_t k = 0; k < img; ++k) acc += std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k]));
        ff.per_width_l1[(start + j) * n + wi] = acc / static_cast<double>(img);
      }
    }
  }
  return ff;
}

WsTrainResult train_ws(const ArchConfig& arch, const FrozenFeatures& features, const WsTrainConfig& config) {
  if (features.size() == 0) throw ConfigError("selector training set is empty");
  if (config.epochs < 0 || config.batch < 1) throw ConfigError("train_ws: epochs must be >= 0 and batch >= 1");
  if (arch.num_tasks != arch.num_widths()) {
    throw ConfigError("selector needs as many tasks as width candidates (tasks=" + std::to_string(arch.num_tasks) +
                      ", widths=" + std::to_string(arch.num_widths()) + ")");
  }
  WsTrainResult result{SelectorModel<float>::initialized(arch, derive_seed(config.seed, kInitStream)), {}};
  auto& sel = result.model;
  Adam<float> adam(sel.parameters(), AdamOptions{config.lr, 0.9, 0.999, 1e-8});
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));

  const std::size_t n = static_cast<std::size_t>(arch.num_widths());
  const std::size_t per = static_cast<std::size_t>(features.channels) * features.height * features.width;
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    WsEpochLog log;
    log.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      const std::size_t m = end - start;
      std::vector<float> f(per * m);
      std::vector<double> l1(n * m);
      std::vector<int> labels(m);
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t s = order[start + j];
        std::copy_n(features.f_de.begin() + static_cast<long>(s * per), per, f.begin() + static_cast<long>(j * per));
        std::copy_n(features.per_width_l1.begin() + static_cast<long>(s * n), n, l1.begin() + static_cast<long>(j * n));
        labels[j] = features.labels[s];
      }
      const auto f_de = Tensor<float>::from({static_cast<int>(m), features.channels, features.height, features.width},
                                            std::move(f));
      adam.zero_grad();
      Tape<float> tape;
      const auto l = selector_losses(&tape, sel, f_de, labels, l1, config.target);
      tape.backward(l.total);
      adam.step();

      const double w = static_cast<double>(m);
      log.cls += l.cls.item() * w;
      log.spars += l.spars.item() * w;
      log.select += l.select.item() * w;
      log.total += l.total.item() * w;
    }
    const double total = static_cast<double>(features.size());
    log.cls /= total;
    log.spars /= total;
    log.select /= total;
    log.total /= total;
    result.log.push_back(log);
  }
  return result;
}

WsTrainResult train_ws(const wab::WabModel<float>& wab, const SampleSet& data, const WsTrainConfig& config) {
  return train_ws(wab.arch(), extract_frozen_features(wab, data, config.batch), config);
}

}  // namespace slim::selector
