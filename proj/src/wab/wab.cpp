// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/wab.hpp"

#include <cmath>

#include "slim/error.hpp"
#include "slim/ops.hpp"

namespace slim::wab {

template <typename T>
Tensor<T> WidthAdaptiveConv<T>::operator()(Tape<T>* tape, const Tensor<T>& x, int rho_in, int rho_out) const {
  return ops::conv2d_sliced(tape, x, weight, bias, rho_in, rho_out);
}

template <typename T>
Tensor<T> Linear<T>::operator()(Tape<T>* tape, const Tensor<T>& x) const {
  return ops::linear(tape, x, weight, bias);
}

namespace {

template <typename T>
WidthAdaptiveConv<T> make_conv(int out, int in, int k, bool bias) {
  WidthAdaptiveConv<T> c;
  c.weight = Tensor<T>::zeros({out, in, k, k}, true);
  if (bias) c.bias = Tensor<T>::zeros({out}, true);
  return c;
}

template <typename T>
Linear<T> make_linear(int dout, int din) {
  return {Tensor<T>::zeros({dout, din}, true), Tensor<T>::zeros({dout}, true)};
}

template <typename T>
void fill_normal(const Tensor<T>& t, Rng& rng, double stddev) {
  for (T& v : t.data()) v = static_cast<T>(rng.normal(0.0, stddev));
}

template <typename T>
void he_init(const WidthAdaptiveConv<T>& c, Rng& rng, double gain = 1.0) {
  const int fan_in = c.weight.dim(1) * c.weight.dim(2) * c.weight.dim(3);
  fill_normal(c.weight, rng, gain * std::sqrt(2.0 / fan_in));
}

template <typename T>
void linear_init(const Linear<T>& l, Rng& rng) {
  fill_normal(l.weight, rng, 1.0 / std::sqrt(static_cast<double>(l.weight.dim(1))));
}

template <typename T, typename U>
Tensor<U> cast_tensor(const Tensor<T>& t) {
  if (!t.defined()) return {};
  std::vector<U> v(t.numel());
  const auto src = t.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<U>(src[i]);
  return Tensor<U>::from(t.shape(), std::move(v), t.requires_grad());
}

template <typename T, typename U>
WidthAdaptiveConv<U> cast_conv(const WidthAdaptiveConv<T>& c) {
  return {cast_tensor<T, U>(c.weight), cast_tensor<T, U>(c.bias)};
}

}  // namespace

template <typename T>
WabModel<T>::WabModel(ArchConfig arch) : arch_(std::move(arch)) {
  arch_.validate();
  const int om = arch_.omega;
  const int k = arch_.kernel;
  const int cde = arch_.c_de;
  encoder.conv_a = make_conv<T>(cde, 3, k, true);
  encoder.conv_b = make_conv<T>(cde, cde, k, true);
  encoder.conv_c = make_conv<T>(cde, cde, k, true);
  encoder.classifier = make_linear<T>(arch_.num_tasks, cde);
  head = make_conv<T>(om, 3, k, true);
  transform = make_conv<T>(om, cde, 1, false);
  trunk.resize(static_cast<std::size_t>(arch_.blocks));
  for (auto& b : trunk) {
    b.conv1 = make_conv<T>(om, om, k, true);
    b.conv2 = make_conv<T>(om, om, k, true);
  }
  tail = make_conv<T>(3, om, k, true);
}

template <typename T>
WabModel<T> WabModel<T>::initialized(ArchConfig arch, std::uint64_t seed) {
  WabModel m(std::move(arch));
  Rng rng(seed);
  he_init(m.encoder.conv_a, rng);
  he_init(m.encoder.conv_b, rng);
  he_init(m.encoder.conv_c, rng, 0.1);
  linear_init(m.encoder.classifier, rng);
  he_init(m.head, rng);
  he_init(m.transform, rng, 0.5);
  for (auto& b : m.trunk) {
    he_init(b.conv1, rng);
    // Residual branches start near identity.
    he_init(b.conv2, rng, 0.1);
  }
  he_init(m.tail, rng, 0.1);
  return m;
}

template <typename T>
std::vector<NamedTensor<T>> WabModel<T>::named_parameters() const {
  std::vector<NamedTensor<T>> out;
  auto conv = [&](const std::string& name, const WidthAdaptiveConv<T>& c) {
    out.push_back({name + ".weight", c.weight});
    if (c.bias.defined()) out.push_back({name + ".bias", c.bias});
  };
  conv("encoder.conv_a", encoder.conv_a);
  conv("encoder.conv_b", encoder.conv_b);
  conv("encoder.conv_c", encoder.conv_c);
  out.push_back({"encoder.classifier.weight", encoder.classifier.weight});
  out.push_back({"encoder.classifier.bias", encoder.classifier.bias});
  conv("head", head);
  conv("transform", transform);
  for (std::size_t i = 0; i < trunk.size(); ++i) {
    conv("trunk." + std::to_string(i) + ".conv1", trunk[i].conv1);
    conv("trunk." + std::to_string(i) + ".conv2", trunk[i].conv2);
  }
  conv("tail", tail);
  return out;
}

template <typename T>
std::vector<Tensor<T>> WabModel<T>::parameters() const {
  std::vector<Tensor<T>> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

template <typename T>
std::int64_t WabModel<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : named_parameters()) n += static_cast<std::int64_t>(p.tensor.numel());
  return n;
}

template <typename T>
Tensor<T> WabModel<T>::encode(Tape<T>* tape, const Tensor<T>& img) const {
  const int cde = arch_.c_de;
  auto h = encoder.conv_a(tape, img, 3, cde);
  auto r = encoder.conv_b(tape, ops::relu(tape, h), cde, cde);
  r = encoder.conv_c(tape, ops::relu(tape, r), cde, cde);
  return ops::add(tape, h, r);
}

template <typename T>
Tensor<T> WabModel<T>::classify(Tape<T>* tape, const Tensor<T>& f_de) const {
  return encoder.classifier(tape, ops::global_avg_pool(tape, f_de));
}

template <typename T>
Tensor<T> WabModel<T>::restore(Tape<T>* tape, const Tensor<T>& img, const Tensor<T>& f_de, int rho,
                               Trace<T>* trace) const {
  arch_.width_index(rho);
  auto h = head(tape, img, 3, rho);
  h = ops::add(tape, h, transform(tape, f_de, arch_.c_de, rho));
  if (trace) trace->features.push_back(h);
  for (const auto& block : trunk) {
    auto r = block.conv1(tape, h, rho, rho);
    r = block.conv2(tape, ops::relu(tape, r), rho, rho);
    h = ops::add(tape, h, r);
    if (trace) trace->features.push_back(h);
  }
  return ops::add(tape, img, tail(tape, h, rho, 3));
}

template <typename T>
typename WabModel<T>::Output WabModel<T>::forward(Tape<T>* tape, const Tensor<T>& img, int rho) const {
  auto f_de = encode(tape, img);
  auto restored = restore(tape, img, f_de, rho);
  return {std::move(restored), std::move(f_de)};
}

template <typename T>
template <typename U>
WabModel<U> WabModel<T>::cast() const {
  WabModel<U> m(arch_);
  m.encoder.conv_a = cast_conv<T, U>(encoder.conv_a);
  m.encoder.conv_b = cast_conv<T, U>(encoder.conv_b);
  m.encoder.conv_c = cast_conv<T, U>(encoder.conv_c);
  m.encoder.classifier = {cast_tensor<T, U>(encoder.classifier.weight), cast_tensor<T, U>(encoder.classifier.bias)};
  m.head = cast_conv<T, U>(head);
  m.transform = cast_conv<T, U>(transform);
  for (std::size_t i = 0; i < trunk.size(); ++i) {
    m.trunk[i].conv1 = cast_conv<T, U>(trunk[i].conv1);
    m.trunk[i].conv2 = cast_conv<T, U>(trunk[i].conv2);
  }
  m.tail = cast_conv<T, U>(tail);
  return m;
}

std::pair<int, int> sample_widths(Rng& rng, const ArchConfig& arch) {
  const auto w = arch.widths();
  if (w.size() < 2) throw ConfigError("sample_widths needs at least two candidate widths");
  const int idx = rng.uniform_int(0, static_cast<int>(w.size()) - 2);
  return {w[static_cast<std::size_t>(idx)], w.back()};
}

template <typename T>
WabLosses<T> wab_losses(Tape<T>* tape, const WabModel<T>& model, const Tensor<T>& img, const Tensor<T>& clean,
                        std::span<const int> labels, int rho_rand) {
  const int full = model.arch().omega;
  auto f_de = model.encode(tape, img);
  auto sub = model.restore(tape, img, f_de, rho_rand);
  auto whole = model.restore(tape, img, f_de, full);
  WabLosses<T> l;
  l.recon = ops::add(tape, ops::l1_loss(tape, sub, clean), ops::l1_loss(tape, whole, clean));
  l.distill = ops::l1_loss(tape, sub, whole.detach());
  l.de = ops::cross_entropy(tape, model.classify(tape, f_de), labels);
  l.total = ops::add(tape, ops::add(tape, l.recon, l.distill), l.de);
  return l;
}

template struct WidthAdaptiveConv<float>;
template struct WidthAdaptiveConv<double>;
template struct Linear<float>;
template struct Linear<double>;
template class WabModel<float>;
template class WabModel<double>;
template WabModel<double> WabModel<float>::cast<double>() const;
template WabModel<float> WabModel<double>::cast<float>() const;
template WabModel<float> WabModel<float>::cast<float>() const;
template WabModel<double> WabModel<double>::cast<double>() const;
template WabLosses<float> wab_losses(Tape<float>*, const WabModel<float>&, const Tensor<float>&, const Tensor<float>&,
                                     std::span<const int>, int);
template WabLosses<double> wab_losses(Tape<double>*, const WabModel<double>&, const Tensor<double>&,
                                      const Tensor<double>&, std::span<const int>, int);

}  // namespace slim::wab
