// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/selector.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "slim/error.hpp"
#include "slim/metrics.hpp"
#include "slim/ops.hpp"

namespace slim::selector {
namespace {

template <typename T>
wab::WidthAdaptiveConv<T> make_conv(int c, int k) {
  return {Tensor<T>::zeros({c, c, k, k}, true), Tensor<T>::zeros({c}, true)};
}

template <typename T>
wab::Linear<T> make_linear(int dout, int din) {
  return {Tensor<T>::zeros({dout, din}, true), Tensor<T>::zeros({dout}, true)};
}

template <typename T>
void fill_normal(const Tensor<T>& t, Rng& rng, double stddev) {
  for (T& v : t.data()) v = static_cast<T>(rng.normal(0.0, stddev));
}

template <typename T, typename U>
Tensor<U> cast_tensor(const Tensor<T>& t) {
  std::vector<U> v(t.numel());
  const auto src = t.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<U>(src[i]);
  return Tensor<U>::from(t.shape(), std::move(v), t.requires_grad());
}

}  // namespace

template <typename T>
SelectorModel<T>::SelectorModel(ArchConfig arch) : arch_(std::move(arch)) {
  arch_.validate();
  const int c = arch_.c_de;
  const int n = arch_.num_widths();
  res_conv1 = make_conv<T>(c, arch_.kernel);
  res_conv2 = make_conv<T>(c, arch_.kernel);
  task_classifier = make_linear<T>(n, c);
  gamma1 = make_linear<T>(c, c);
  gamma2 = make_linear<T>(c, c);
  sample_classifier = make_linear<T>(n, c);
}

template <typename T>
SelectorModel<T> SelectorModel<T>::initialized(ArchConfig arch, std::uint64_t seed) {
  SelectorModel m(std::move(arch));
  Rng rng(seed);
  const int c = m.arch_.c_de;
  const double conv_sd = std::sqrt(2.0 / (c * m.arch_.kernel * m.arch_.kernel));
  fill_normal(m.res_conv1.weight, rng, conv_sd);
  fill_normal(m.res_conv2.weight, rng, 0.1 * conv_sd);
  const double lin_sd = 1.0 / std::sqrt(static_cast<double>(c));
  for (const auto* l : {&m.task_classifier, &m.gamma1, &m.gamma2, &m.sample_classifier}) {
    fill_normal(l->weight, rng, lin_sd);
  }
  return m;
}

template <typename T>
std::vector<wab::NamedTensor<T>> SelectorModel<T>::named_parameters() const {
  return {
      {"res_conv1.weight", res_conv1.weight},
      {"res_conv1.bias", res_conv1.bias},
      {"res_conv2.weight", res_conv2.weight},
      {"res_conv2.bias", res_conv2.bias},
      {"task_classifier.weight", task_classifier.weight},
      {"task_classifier.bias", task_classifier.bias},
      {"gamma1.weight", gamma1.weight},
      {"gamma1.bias", gamma1.bias},
      {"gamma2.weight", gamma2.weight},
      {"gamma2.bias", gamma2.bias},
      {"sample_classifier.weight", sample_classifier.weight},
      {"sample_classifier.bias", sample_classifier.bias},
  };
}

template <typename T>
std::vector<Tensor<T>> SelectorModel<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::int64_t SelectorModel<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : named_parameters()) n += static_cast<std::int64_t>(p.tensor.numel());
  return n;
}

template <typename T>
typename SelectorModel<T>::Logits SelectorModel<T>::logits(Tape<T>* tape, const Tensor<T>& f_de) const {
  const int c = arch_.c_de;
  if (f_de.rank() != 4 || f_de.dim(1) != c) {
    throw DimensionError("selector: expected f_de [B," + std::to_string(c) + ",H,W], got " + shape_str(f_de.shape()));
  }
  auto r = res_conv1(tape, f_de, c, c);
  r = res_conv2(tape, ops::relu(tape, r), c, c);
  const auto f_task = ops::global_avg_pool(tape, ops::add(tape, f_de, r));
  auto task = task_classifier(tape, f_task);

  const auto f_sample = gamma2(tape, gamma1(tape, ops::global_avg_pool(tape, f_de)));
  auto decision = ops::add(tape, task, sample_classifier(tape, f_sample));
  return {std::move(task), std::move(decision)};
}

template <typename T>
template <typename U>
SelectorModel<U> SelectorModel<T>::cast() const {
  SelectorModel<U> m(arch_);
  auto dst = m.named_parameters();
  auto src = named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto c = cast_tensor<T, U>(src[i].tensor);
    std::copy(c.data().begin(), c.data().end(), dst[i].tensor.data().begin());
  }
  return m;
}

int argmax_prefer_small(std::span<const double> values) {
  if (values.empty()) throw DimensionError("argmax of an empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

template <typename T>
std::vector<SelectorDecision> decide(const ArchConfig& arch, const Tensor<T>& decision_logits) {
  const int n = arch.num_widths();
  if (decision_logits.rank() != 2 || decision_logits.dim(1) != n) {
    throw DimensionError("decide: expected [B," + std::to_string(n) + "] logits, got " +
                         shape_str(decision_logits.shape()));
  }
  const auto widths = arch.widths();
  const auto probs = ops::softmax<T>(nullptr, decision_logits);
  std::vector<SelectorDecision> out(static_cast<std::size_t>(decision_logits.dim(0)));
  for (std::size_t b = 0; b < out.size(); ++b) {
    auto& d = out[b];
    std::vector<double> z(static_cast<std::size_t>(n));
    d.probs.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      z[static_cast<std::size_t>(i)] = static_cast<double>(decision_logits.ptr()[b * n + i]);
      d.probs[static_cast<std::size_t>(i)] = static_cast<double>(probs.ptr()[b * n + i]);
    }
    // Argmax on logits: float softmax can round distinct logits to equal probs.
    d.chosen_index = argmax_prefer_small(z);
    d.chosen_width = widths[static_cast<std::size_t>(d.chosen_index)];
    d.chosen_ratio = arch.ratios[static_cast<std::size_t>(d.chosen_index)];
  }
  return out;
}

template <typename T>
std::vector<SelectorDecision> selector_forward(const SelectorModel<T>& sel, const Tensor<T>& f_de) {
  return decide(sel.arch(), sel.logits(nullptr, f_de).decision);
}

template <typename T>
SelectorLosses<T> losses_from_logits(Tape<T>* tape, const ArchConfig& arch, const Tensor<T>& task_logits,
                                     const Tensor<T>& decision_logits, std::span<const int> labels,
                                     std::span<const double> per_width_l1, double target) {
  const int n = arch.num_widths();
  if (arch.num_tasks != n) {
    throw ConfigError("selector needs as many tasks as width candidates (tasks=" + std::to_string(arch.num_tasks) +
                      ", widths=" + std::to_string(n) + ")");
  }
  if (target < 0.0 || target > 1.0) throw ConfigError("sparsity target must lie in [0,1]");
  const int m = decision_logits.dim(0);
  if (per_width_l1.size() != static_cast<std::size_t>(m) * n) {
    throw DimensionError("per-width loss matrix has " + std::to_string(per_width_l1.size()) + " entries, expected " +
                         std::to_string(m * n));
  }

  SelectorLosses<T> l;
  l.cls = ops::cross_entropy(tape, task_logits, labels);

  const auto p = ops::softmax(tape, decision_logits);
  const auto widths = arch.widths();
  std::vector<T> ratio(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ratio[static_cast<std::size_t>(i)] = static_cast<T>(static_cast<double>(widths[i]) / arch.omega);
  const auto ratio_row = Tensor<T>::from({1, n}, std::move(ratio));
  const auto expected = ops::linear(tape, p, ratio_row, Tensor<T>{});
  l.spars = ops::mean(tape, ops::square(tape, ops::add_scalar(tape, expected, static_cast<T>(-target))));

  std::vector<T> lw(per_width_l1.begin(), per_width_l1.end());
  const auto lmat = Tensor<T>::from({m, n}, std::move(lw));
  l.select = ops::scale(tape, ops::sum(tape, ops::mul(tape, p, lmat)), static_cast<T>(1.0 / (static_cast<double>(m) * n)));

  l.total = ops::add(tape, ops::add(tape, l.cls, l.spars), l.select);
  return l;
}

template <typename T>
SelectorLosses<T> selector_losses(Tape<T>* tape, const SelectorModel<T>& sel, const Tensor<T>& f_de,
                                  std::span<const int> labels, std::span<const double> per_width_l1,
                                  double target) {
  const auto lg = sel.logits(tape, f_de);
  return losses_from_logits(tape, sel.arch(), lg.task, lg.decision, labels, per_width_l1, target);
}

void check_compatible(const ArchConfig& backbone, const ArchConfig& sel) {
  std::vector<std::string> bad;
  if (backbone.omega != sel.omega) bad.push_back("omega");
  if (backbone.ratios != sel.ratios) bad.push_back("ratios");
  if (backbone.c_de != sel.c_de) bad.push_back("c_de");
  if (backbone.kernel != sel.kernel) bad.push_back("kernel");
  if (backbone.num_tasks != sel.num_tasks) bad.push_back("num_tasks");
  if (bad.empty()) return;
  std::string msg = "backbone and selector disagree on:";
  for (const auto& f : bad) msg += " " + f;
  throw CompatibilityError(msg);
}

namespace {

Tensor<float> gather(const Tensor<float>& t, const std::vector<int>& rows) {
  Shape s = t.shape();
  const std::size_t per = t.numel() / static_cast<std::size_t>(s[0]);
  s[0] = static_cast<int>(rows.size());
  std::vector<float> v(per * rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(t.ptr() + static_cast<std::size_t>(rows[i]) * per, per, v.begin() + static_cast<long>(i * per));
  }
  return Tensor<float>::from(s, std::move(v));
}

}  // namespace

Routed route_and_restore(const wab::WabModel<float>& wab, const SelectorModel<float>& sel,
                         const std::vector<const Image*>& images) {
  check_compatible(wab.arch(), sel.arch());
  Routed out;
  if (images.empty()) return out;
  const int h = images.front()->height;
  const int w = images.front()->width;
  const metrics::ModelDesc desc{wab.arch(), true};

  const auto x = to_tensor<float>(images);
  const auto f_de = wab.encode(nullptr, x);
  out.decisions = selector_forward(sel, f_de);

  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < out.decisions.size(); ++i) groups[out.decisions[i].chosen_width].push_back(static_cast<int>(i));

  out.restored.resize(images.size());
  out.flops.resize(images.size());
  for (const auto& [rho, idx] : groups) {
    const auto y = wab.restore(nullptr, gather(x, idx), gather(f_de, idx), rho);
    const std::int64_t cost = metrics::count_flops(desc, rho, h, w).flops;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out.restored[static_cast<std::size_t>(idx[j])] = from_tensor(y, static_cast<int>(j));
      out.flops[static_cast<std::size_t>(idx[j])] = cost;
    }
  }
  return out;
}

template class SelectorModel<float>;
template class SelectorModel<double>;
template SelectorModel<double> SelectorModel<float>::cast<double>() const;
template SelectorModel<float> SelectorModel<double>::cast<float>() const;
template SelectorModel<float> SelectorModel<float>::cast<float>() const;
template std::vector<SelectorDecision> decide(const ArchConfig&, const Tensor<float>&);
template std::vector<SelectorDecision> decide(const ArchConfig&, const Tensor<double>&);
template std::vector<SelectorDecision> selector_forward(const SelectorModel<float>&, const Tensor<float>&);
template std::vector<SelectorDecision> selector_forward(const SelectorModel<double>&, const Tensor<double>&);
template SelectorLosses<float> losses_from_logits(Tape<float>*, const ArchConfig&, const Tensor<float>&,
                                                  const Tensor<float>&, std::span<const int>,
                                                  std::span<const double>, double);
template SelectorLosses<double> losses_from_logits(Tape<double>*, const ArchConfig&, const Tensor<double>&,
                                                   const Tensor<double>&, std::span<const int>,
                                                   std::span<const double>, double);
template SelectorLosses<float> selector_losses(Tape<float>*, const SelectorModel<float>&, const Tensor<float>&,
                                               std::span<const int>, std::span<const double>, double);
template SelectorLosses<double> selector_losses(Tape<double>*, const SelectorModel<double>&, const Tensor<double>&,
                                                std::span<const int>, std::span<const double>, double);

}  // namespace slim::selector
