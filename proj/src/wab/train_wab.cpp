// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "slim/adam.hpp"
#include "slim/error.hpp"
#include "slim/wab.hpp"

namespace slim::wab {
namespace {

constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kShuffleStream = 12;
constexpr std::uint64_t kWidthStream = 13;

struct Batch {
  Tensor<float> degraded;
  Tensor<float> clean;
  std::vector<int> labels;
};

Batch make_batch(const SampleSet& data, std::span<const std::size_t> idx) {
  std::vector<const Image*> deg;
  std::vector<const Image*> cln;
  Batch b;
  for (std::size_t i : idx) {
    deg.push_back(&data[i].degraded);
    cln.push_back(&data[i].clean);
    b.labels.push_back(data[i].label);
  }
  b.degraded = to_tensor<float>(deg);
  b.clean = to_tensor<float>(cln);
  return b;
}

void check_set(const ArchConfig& arch, const SampleSet& data) {
  if (data.empty()) throw ConfigError("training set is empty");
  for (const auto& s : data) {
    if (s.label < 0 || s.label >= arch.num_tasks) {
      throw ConfigError("sample label " + std::to_string(s.label) + " outside [0," + std::to_string(arch.num_tasks) + ")");
    }
  }
}

}  // namespace

double mean_wab_loss(const WabModel<float>& model, const SampleSet& data, int rho_rand, int batch) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch));
    const auto b = make_batch(data, std::span(order).subspan(start, end - start));
    const auto l = wab_losses<float>(nullptr, model, b.degraded, b.clean, b.labels, rho_rand);
    total += static_cast<double>(l.total.item()) * static_cast<double>(end - start);
  }
  return total / static_cast<double>(data.size());
}

WabTrainResult train_wab(const ArchConfig& arch, const WabTrainConfig& config, const SampleSet& data,
                         const EpochCallback& on_epoch) {
  check_set(arch, data);
  if (config.epochs < 0 || config.batch < 1) throw ConfigError("train_wab: epochs must be >= 0 and batch >= 1");

  WabTrainResult result{WabModel<float>::initialized(arch, derive_seed(config.seed, kInitStream)), {}, 0.0};
  WabModel<float>& model = result.model;

  const auto widths = arch.widths();
  double init = 0.0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) init += mean_wab_loss(model, data, widths[i], config.batch);
  result.initial_loss = widths.size() > 1 ? init / static_cast<double>(widths.size() - 1) : 0.0;

  Adam<float> adam(model.parameters(), AdamOptions{config.lr, 0.9, 0.999, 1e-8});
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  Rng width_rng(derive_seed(config.seed, kWidthStream));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t per_epoch = (data.size() + config.batch - 1) / config.batch;
  const double total_iters = static_cast<double>(per_epoch) * config.epochs;
  std::size_t iter = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    EpochLog log;
    log.epoch = epoch;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
      const auto b = make_batch(data, std::span(order).subspan(start, end - start));
      const auto [rho_rand, rho_full] = sample_widths(width_rng, arch);
      (void)rho_full;

      const double progress = total_iters > 0 ? static_cast<double>(iter) / total_iters : 0.0;
      adam.set_lr(config.lr_final + 0.5 * (config.lr - config.lr_final) * (1.0 + std::cos(std::numbers::pi * progress)));

      adam.zero_grad();
      Tape<float> tape;
      const auto l = wab_losses<float>(&tape, model, b.degraded, b.clean, b.labels, rho_rand);
      tape.backward(l.total);
      adam.step();
      ++iter;

      const double w = static_cast<double>(end - start);
      log.recon += l.recon.item() * w;
      log.distill += l.distill.item() * w;
      log.de += l.de.item() * w;
      log.total += l.total.item() * w;
    }
    const double n = static_cast<double>(data.size());
    log.recon /= n;
    log.distill /= n;
    log.de /= n;
    log.total /= n;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace slim::wab
