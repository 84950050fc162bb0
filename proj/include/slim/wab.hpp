// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "slim/arch.hpp"
#include "slim/rng.hpp"
#include "slim/sample_set.hpp"
#include "slim/tensor.hpp"

// Width-adaptive backbone: one weight store holding nested sub-networks, each
// obtained by keeping the leading rho input/output channels of every
// width-adaptive convolution.
namespace slim::wab {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

/// Full-width weight [out,in,k,k] with optional bias [out]; can be evaluated
/// on any leading sub-block.
template <typename T>
struct WidthAdaptiveConv {
  Tensor<T> weight;
  Tensor<T> bias;  // undefined for the transformation conv

  int out_width() const { return weight.dim(0); }
  int in_width() const { return weight.dim(1); }
  Tensor<T> operator()(Tape<T>* tape, const Tensor<T>& x, int rho_in, int rho_out) const;
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [dout, din]
  Tensor<T> bias;    // [dout]
  Tensor<T> operator()(Tape<T>* tape, const Tensor<T>& x) const;
};

/// Fixed-width residual encoder over the RGB input plus its task classifier.
template <typename T>
struct DegradationEncoder {
  WidthAdaptiveConv<T> conv_a;  // 3 -> c_de
  WidthAdaptiveConv<T> conv_b;  // c_de -> c_de
  WidthAdaptiveConv<T> conv_c;  // c_de -> c_de
  Linear<T> classifier;         // c_de -> num_tasks, on the pooled encoding
};

template <typename T>
struct TrunkBlock {
  WidthAdaptiveConv<T> conv1;
  WidthAdaptiveConv<T> conv2;
};

/// Per-layer activations captured by restore() for inspection.
template <typename T>
struct Trace {
  std::vector<Tensor<T>> features;  // head (+ transform), then each block output
};

template <typename T>
class WabModel {
 public:
  /// All parameters zero.
  explicit WabModel(ArchConfig arch);
  /// He-normal initialization from a seed.
  static WabModel initialized(ArchConfig arch, std::uint64_t seed);

  const ArchConfig& arch() const { return arch_; }

  /// Every parameter tensor in a stable order with dotted names.
  std::vector<NamedTensor<T>> named_parameters() const;
  std::vector<Tensor<T>> parameters() const;
  std::int64_t parameter_count() const;

  /// Degradation encoding f_de [B,c_de,H,W] of images [B,3,H,W].
  Tensor<T> encode(Tape<T>* tape, const Tensor<T>& img) const;
  /// Task logits [B,num_tasks] from f_de.
  Tensor<T> classify(Tape<T>* tape, const Tensor<T>& f_de) const;
  /// Restored image at width rho from a precomputed encoding. Throws
  /// WidthError if rho is not a candidate width.
  Tensor<T> restore(Tape<T>* tape, const Tensor<T>& img, const Tensor<T>& f_de, int rho,
                    Trace<T>* trace = nullptr) const;

  struct Output {
    Tensor<T> restored;
    Tensor<T> f_de;
  };
  /// encode + restore.
  Output forward(Tape<T>* tape, const Tensor<T>& img, int rho) const;

  /// Deep copy into another precision.
  template <typename U>
  WabModel<U> cast() const;

  DegradationEncoder<T> encoder;
  WidthAdaptiveConv<T> head;       // [omega,3,k,k]
  WidthAdaptiveConv<T> transform;  // [omega,c_de,1,1], no bias
  std::vector<TrunkBlock<T>> trunk;
  WidthAdaptiveConv<T> tail;  // [3,omega,k,k]

 private:
  ArchConfig arch_;
};

struct PrefixLayerCheck {
  int layer = 0;
  double max_deviation = 0.0;  // |F'[:rho1] - (F + O)|, worst element
  double remainder_norm = 0.0; // max |O|, for context
};

struct PrefixReport {
  std::vector<PrefixLayerCheck> layers;
  double max_deviation() const;
};

inline constexpr double kPrefixTolerance = 1e-9;

/// Runs a linear (activation-free) stack of width-adaptive layers at widths
/// rho1 < rho2 and checks, after every layer, that the first rho1 channels of
/// the wide pass equal the narrow pass plus the remainder carried through the
/// stack: O_l = W_l[:rho1,:rho1] * O_{l-1} + W_l[:rho1, rho1:rho2] * F'_{l-1}[rho1:rho2].
/// The remainder is built from explicit copies of `reference` (defaults to
/// `layers`). input must have at least rho2 channels.
PrefixReport check_prefix_decomposition(const std::vector<WidthAdaptiveConv<double>>& layers,
                                        const Tensor<double>& input, int rho1, int rho2,
                                        const std::vector<WidthAdaptiveConv<double>>* reference = nullptr);

/// As check_prefix_decomposition, but throws VerificationError naming the
/// first layer whose deviation exceeds kPrefixTolerance.
PrefixReport verify_prefix_decomposition(const std::vector<WidthAdaptiveConv<double>>& layers,
                                         const Tensor<double>& input, int rho1, int rho2);

/// Draws (rho_rand, rho_full): rho_rand uniform over all candidates but the
/// widest, rho_full always the widest.
std::pair<int, int> sample_widths(Rng& rng, const ArchConfig& arch);

template <typename T>
struct WabLosses {
  Tensor<T> recon;    // L1(sub, clean) + L1(full, clean)
  Tensor<T> distill;  // L1(sub, detach(full))
  Tensor<T> de;       // CE(task logits, label)
  Tensor<T> total;
};

template <typename T>
WabLosses<T> wab_losses(Tape<T>* tape, const WabModel<T>& model, const Tensor<T>& img, const Tensor<T>& clean,
                        std::span<const int> labels, int rho_rand);

struct WabTrainConfig {
  int epochs = 300;
  int batch = 16;
  double lr = 1e-3;
  double lr_final = 1e-4;  // cosine-annealed toward this
  std::uint64_t seed = 1;
};

struct EpochLog {
  int epoch = 0;
  double recon = 0.0;
  double distill = 0.0;
  double de = 0.0;
  double total = 0.0;
};

struct WabTrainResult {
  WabModel<float> model;
  std::vector<EpochLog> log;
  double initial_loss = 0.0;  // mean L_WAB of the untrained model over the set
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains a freshly initialized backbone. Throws ConfigError on an empty set
/// or a label outside [0, num_tasks).
WabTrainResult train_wab(const ArchConfig& arch, const WabTrainConfig& config, const SampleSet& data,
                         const EpochCallback& on_epoch = {});

/// Mean L_WAB over the whole set for a fixed width pair (no training).
double mean_wab_loss(const WabModel<float>& model, const SampleSet& data, int rho_rand, int batch);

}  // namespace slim::wab
