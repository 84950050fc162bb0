// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slim/arch.hpp"
#include "slim/sample_set.hpp"
#include "slim/wab.hpp"

// Width selector: routes each input to a backbone width from its degradation
// encoding, combining a task branch (residual block + pooling) and a sample
// branch (pooling + two projections).
namespace slim::selector {

template <typename T>
class SelectorModel {
 public:
  explicit SelectorModel(ArchConfig arch);
  static SelectorModel initialized(ArchConfig arch, std::uint64_t seed);

  const ArchConfig& arch() const { return arch_; }
  std::vector<wab::NamedTensor<T>> named_parameters() const;
  std::vector<Tensor<T>> parameters() const;
  std::int64_t parameter_count() const;

  struct Logits {
    Tensor<T> task;      // C(f_task; xi1), [B,n]
    Tensor<T> decision;  // C(f_task; xi1) + C(f_sample; xi2), [B,n]
  };
  Logits logits(Tape<T>* tape, const Tensor<T>& f_de) const;

  template <typename U>
  SelectorModel<U> cast() const;

  // task branch
  wab::WidthAdaptiveConv<T> res_conv1;  // phi1
  wab::WidthAdaptiveConv<T> res_conv2;
  wab::Linear<T> task_classifier;  // xi1
  // sample branch
  wab::Linear<T> gamma1;
  wab::Linear<T> gamma2;
  wab::Linear<T> sample_classifier;  // xi2

 private:
  ArchConfig arch_;
};

struct SelectorDecision {
  std::vector<double> probs;
  int chosen_index = 0;
  int chosen_width = 0;
  double chosen_ratio = 0.0;
};

/// Index of the largest value; ties go to the smaller index.
int argmax_prefer_small(std::span<const double> values);

/// Decisions for a batch of encodings. The choice is the argmax of the
/// decision logits, which softmax preserves, with ties toward the smaller
/// width.
template <typename T>
std::vector<SelectorDecision> selector_forward(const SelectorModel<T>& sel, const Tensor<T>& f_de);

/// Decisions straight from a [B,n] logits tensor.
template <typename T>
std::vector<SelectorDecision> decide(const ArchConfig& arch, const Tensor<T>& decision_logits);

template <typename T>
struct SelectorLosses {
  Tensor<T> cls;
  Tensor<T> spars;
  Tensor<T> select;
  Tensor<T> total;
};

/// Loss terms from precomputed logits. per_width_l1 is row-major [m x n]
/// (sample j, width i) and carries no gradient. Throws ConfigError unless the
/// number of tasks equals the number of widths.
template <typename T>
SelectorLosses<T> losses_from_logits(Tape<T>* tape, const ArchConfig& arch, const Tensor<T>& task_logits,
                                     const Tensor<T>& decision_logits, std::span<const int> labels,
                                     std::span<const double> per_width_l1, double target);

template <typename T>
SelectorLosses<T> selector_losses(Tape<T>* tape, const SelectorModel<T>& sel, const Tensor<T>& f_de,
                                  std::span<const int> labels, std::span<const double> per_width_l1,
                                  double target);

/// Everything selector training needs from a frozen backbone: encodings and
/// per-width L1 reconstruction losses. These are fixed for a frozen model, so
/// they are computed once per dataset.
struct FrozenFeatures {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> f_de;          // [N, c_de, H, W]
  std::vector<double> per_width_l1;  // [N, n]
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

FrozenFeatures extract_frozen_features(const wab::WabModel<float>& wab, const SampleSet& data, int batch);

struct WsTrainConfig {
  int epochs = 20;
  int batch = 16;
  double lr = 0.01;
  double target = 0.8;
  std::uint64_t seed = 1;
};

struct WsEpochLog {
  int epoch = 0;
  double cls = 0.0;
  double spars = 0.0;
  double select = 0.0;
  double total = 0.0;
};

struct WsTrainResult {
  SelectorModel<float> model;
  std::vector<WsEpochLog> log;
};

/// Trains a fresh selector against a frozen backbone's features.
WsTrainResult train_ws(const ArchConfig& arch, const FrozenFeatures& features, const WsTrainConfig& config);

/// extract_frozen_features + train_ws. The backbone is never modified.
WsTrainResult train_ws(const wab::WabModel<float>& wab, const SampleSet& data, const WsTrainConfig& config);

/// Throws CompatibilityError listing every mismatched field.
void check_compatible(const ArchConfig& backbone, const ArchConfig& selector);

struct Routed {
  std::vector<Image> restored;
  std::vector<SelectorDecision> decisions;
  std::vector<std::int64_t> flops;  // per image, backbone + selector
};

/// Encodes each image once, picks its width, and restores it at that width.
Routed route_and_restore(const wab::WabModel<float>& wab, const SelectorModel<float>& sel,
                         const std::vector<const Image*>& images);

}  // namespace slim::selector
