// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slim/error.hpp"
#include "slim/simd/kernels.hpp"

namespace slim::ops {
namespace {

template <typename T>
bool tracks(Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
  if (tape == nullptr) return false;
  for (const Tensor<T>* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void check_finite(const Tensor<T>& out, const char* op) {
  if (!strict()) return;
  for (T v : out.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

template <typename T>
Tensor<T> finish(Tensor<T> out, const char* op) {
  check_finite(out, op);
  return out;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

// Unrolls one [C,H,W] plane stack into a [C*k*k, H*W] patch matrix.
template <typename T>
void im2col(const T* x, int channels, int h, int w, int k, int pad, T* col) {
  const int hw = h * w;
  for (int c = 0; c < channels; ++c) {
    const T* plane = x + static_cast<long>(c) * hw;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        T* row = col + static_cast<long>((c * k + kh) * k + kw) * hw;
        const int dx = kw - pad;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          T* dst = row + static_cast<long>(y) * w;
          const int sy = y + kh - pad;
          if (sy < 0 || sy >= h || x0 >= x1) {
            std::fill(dst, dst + w, T(0));
            continue;
          }
          const T* src = plane + static_cast<long>(sy) * w;
          std::fill(dst, dst + x0, T(0));
          std::copy(src + x0 + dx, src + x1 + dx, dst + x0);
          std::fill(dst + x1, dst + w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int channels, int h, int w, int k, int pad, T* x) {
  const int hw = h * w;
  for (int c = 0; c < channels; ++c) {
    T* plane = x + static_cast<long>(c) * hw;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw) {
        const T* row = col + static_cast<long>((c * k + kh) * k + kw) * hw;
        const int dx = kw - pad;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          const int sy = y + kh - pad;
          if (sy < 0 || sy >= h) continue;
          const T* src = row + static_cast<long>(y) * w;
          T* dst = plane + static_cast<long>(sy) * w + dx;
          for (int xx = x0; xx < x1; ++xx) dst[xx] += src[xx];
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& scratch(int slot, std::size_t n) {
  thread_local std::vector<T> bufs[2];
  auto& b = bufs[slot];
  if (b.size() < n) b.resize(n);
  return b;
}

template <typename T>
Tensor<T> conv_impl(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                    int rho_in, int rho_out) {
  if (input.rank() != 4 || weight.rank() != 4) {
    throw DimensionError("conv2d: expected 4-D input and weight, got " + shape_str(input.shape()) + " and " +
                         shape_str(weight.shape()));
  }
  const int w_out = weight.dim(0);
  const int w_in = weight.dim(1);
  const int k = weight.dim(2);
  if (weight.dim(3) != k || k % 2 == 0) throw DimensionError("conv2d: kernel must be square and odd");
  if (rho_in <= 0 || rho_in > w_in || rho_out <= 0 || rho_out > w_out) {
    throw WidthError("conv2d: width (" + std::to_string(rho_in) + "->" + std::to_string(rho_out) +
                     ") outside stored weight " + shape_str(weight.shape()));
  }
  if (input.dim(1) != rho_in) {
    throw DimensionError("conv2d: input has " + std::to_string(input.dim(1)) + " channels, expected " +
                         std::to_string(rho_in));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != w_out)) {
    throw DimensionError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match weight");
  }
  const int batch = input.dim(0);
  const int h = input.dim(2);
  const int w = input.dim(3);
  const int hw = h * w;
  const int pad = k / 2;
  const int kk = k * k;
  const int ldw = w_in * kk;
  const int rows = rho_in * kk;
  const bool direct = (k == 1);

  auto out = Tensor<T>::zeros({batch, rho_out, h, w});
  const auto& kern = simd::kernels<T>();
  T* col = direct ? nullptr : scratch<T>(0, static_cast<std::size_t>(rows) * hw).data();
  for (int b = 0; b < batch; ++b) {
    const T* xb = input.ptr() + static_cast<long>(b) * rho_in * hw;
    T* ob = out.ptr() + static_cast<long>(b) * rho_out * hw;
    if (bias.defined()) {
      for (int co = 0; co < rho_out; ++co) std::fill(ob + static_cast<long>(co) * hw, ob + static_cast<long>(co + 1) * hw, bias.ptr()[co]);
    }
    const T* patches = xb;
    if (!direct) {
      im2col(xb, rho_in, h, w, k, pad, col);
      patches = col;
    }
    kern.gemm_nn(rho_out, hw, rows, weight.ptr(), ldw, patches, hw, ob, hw);
  }

  if (tracks(tape, {&input, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->record([input, weight, bias, out, batch, h, w, hw, k, pad, kk, ldw, rows, rho_in, rho_out, direct]() {
      const auto& kern = simd::kernels<T>();
      const T* gout = out.grad().data();
      T* gw = weight.requires_grad() ? weight.grad().data() : nullptr;
      T* gb = (bias.defined() && bias.requires_grad()) ? bias.grad().data() : nullptr;
      T* gin = input.requires_grad() ? input.grad().data() : nullptr;
      T* col = direct ? nullptr : scratch<T>(0, static_cast<std::size_t>(rows) * hw).data();
      T* dcol = (gin && !direct) ? scratch<T>(1, static_cast<std::size_t>(rows) * hw).data() : nullptr;
      for (int b = 0; b < batch; ++b) {
        const T* gob = gout + static_cast<long>(b) * rho_out * hw;
        const T* xb = input.ptr() + static_cast<long>(b) * rho_in * hw;
        if (gb) {
          for (int co = 0; co < rho_out; ++co) gb[co] += kern.sum(hw, gob + static_cast<long>(co) * hw);
        }
        if (gw) {
          const T* patches = xb;
          if (!direct) {
            im2col(xb, rho_in, h, w, k, pad, col);
            patches = col;
          }
          kern.gemm_nt(rho_out, rows, hw, gob, hw, patches, hw, gw, ldw);
        }
        if (gin) {
          T* gxb = gin + static_cast<long>(b) * rho_in * hw;
          if (direct) {
            kern.gemm_tn(rows, hw, rho_out, weight.ptr(), ldw, gob, hw, gxb, hw);
          } else {
            std::fill(dcol, dcol + static_cast<long>(rows) * hw, T(0));
            kern.gemm_tn(rows, hw, rho_out, weight.ptr(), ldw, gob, hw, dcol, hw);
            col2im_add(dcol, rho_in, h, w, k, pad, gxb);
          }
        }
      }
    });
  }
  return finish(std::move(out), "conv2d");
}

template <typename T>
Tensor<T> unary(Tape<T>* tape, const Tensor<T>& x, const char* name, auto fwd, auto dfdx) {
  auto out = Tensor<T>::zeros(x.shape());
  const auto xs = x.data();
  const auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = fwd(xs[i]);
  if (tracks(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record([x, out, dfdx]() {
      const auto xs = x.data();
      const auto go = out.grad();
      const auto gx = x.grad();
      for (std::size_t i = 0; i < xs.size(); ++i) gx[i] += go[i] * dfdx(xs[i]);
    });
  }
  return finish(std::move(out), name);
}

}  // namespace

template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int pad) {
  if (weight.rank() != 4) throw DimensionError("conv2d: weight must be 4-D, got " + shape_str(weight.shape()));
  if (pad != weight.dim(2) / 2) {
    throw DimensionError("conv2d: pad " + std::to_string(pad) + " must equal k/2 for same-size output");
  }
  if (input.rank() != 4 || input.dim(1) != weight.dim(1)) {
    throw DimensionError("conv2d: input " + shape_str(input.shape()) + " incompatible with weight " +
                         shape_str(weight.shape()));
  }
  return conv_impl(tape, input, weight, bias, weight.dim(1), weight.dim(0));
}

template <typename T>
Tensor<T> conv2d_sliced(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight,
                        const Tensor<T>& bias, int rho_in, int rho_out) {
  return conv_impl(tape, input, weight, bias, rho_in, rho_out);
}

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x) {
  return unary(
      tape, x, "relu", [](T v) { return v > T(0) ? v : T(0); }, [](T v) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> square(Tape<T>* tape, const Tensor<T>& x) {
  return unary(
      tape, x, "square", [](T v) { return v * v; }, [](T v) { return T(2) * v; });
}

template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T factor) {
  return unary(
      tape, x, "scale", [factor](T v) { return v * factor; }, [factor](T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(Tape<T>* tape, const Tensor<T>& x, T value) {
  return unary(
      tape, x, "add_scalar", [value](T v) { return v + value; }, [](T) { return T(1); });
}

template <typename T>
Tensor<T> global_avg_pool(Tape<T>* tape, const Tensor<T>& x) {
  if (x.rank() != 4) throw DimensionError("global_avg_pool: expected [B,C,H,W], got " + shape_str(x.shape()));
  const int b = x.dim(0);
  const int c = x.dim(1);
  const int hw = x.dim(2) * x.dim(3);
  auto out = Tensor<T>::zeros({b, c});
  for (int i = 0; i < b * c; ++i) {
    T acc = 0;
    const T* p = x.ptr() + static_cast<long>(i) * hw;
    for (int j = 0; j < hw; ++j) acc += p[j];
    out.ptr()[i] = acc / T(hw);
  }
  if (tracks(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record([x, out, b, c, hw]() {
      const T* go = out.grad().data();
      T* gx = x.grad().data();
      for (int i = 0; i < b * c; ++i) {
        const T g = go[i] / T(hw);
        T* p = gx + static_cast<long>(i) * hw;
        for (int j = 0; j < hw; ++j) p[j] += g;
      }
    });
  }
  return finish(std::move(out), "global_avg_pool");
}

template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(1)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(weight.shape()));
  }
  const int b = x.dim(0);
  const int din = x.dim(1);
  const int dout = weight.dim(0);
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != dout)) {
    throw DimensionError("linear: bias shape " + shape_str(bias.shape()) + " does not match weight");
  }
  auto out = Tensor<T>::zeros({b, dout});
  if (bias.defined()) {
    for (int i = 0; i < b; ++i) std::copy(bias.ptr(), bias.ptr() + dout, out.ptr() + static_cast<long>(i) * dout);
  }
  simd::kernels<T>().gemm_nt(b, dout, din, x.ptr(), din, weight.ptr(), din, out.ptr(), dout);
  if (tracks(tape, {&x, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->record([x, weight, bias, out, b, din, dout]() {
      const auto& kern = simd::kernels<T>();
      const T* go = out.grad().data();
      if (x.requires_grad()) kern.gemm_nn(b, din, dout, go, dout, weight.ptr(), din, x.grad().data(), din);
      if (weight.requires_grad()) kern.gemm_tn(dout, din, b, go, dout, x.ptr(), din, weight.grad().data(), din);
      if (bias.defined() && bias.requires_grad()) {
        T* gb = bias.grad().data();
        for (int i = 0; i < b; ++i) {
          for (int j = 0; j < dout; ++j) gb[j] += go[static_cast<long>(i) * dout + j];
        }
      }
    });
  }
  return finish(std::move(out), "linear");
}

template <typename T>
Tensor<T> softmax(Tape<T>* tape, const Tensor<T>& logits) {
  if (logits.rank() != 2) throw DimensionError("softmax: expected [B,n], got " + shape_str(logits.shape()));
  const int b = logits.dim(0);
  const int n = logits.dim(1);
  auto out = Tensor<T>::zeros({b, n});
  for (int i = 0; i < b; ++i) {
    const T* z = logits.ptr() + static_cast<long>(i) * n;
    T* p = out.ptr() + static_cast<long>(i) * n;
    const T zmax = *std::max_element(z, z + n);
    T total = 0;
    for (int j = 0; j < n; ++j) {
      p[j] = std::exp(z[j] - zmax);
      total += p[j];
    }
    for (int j = 0; j < n; ++j) p[j] /= total;
  }
  if (tracks(tape, {&logits})) {
    out.set_requires_grad(true);
    tape->record([logits, out, b, n]() {
      const T* p = out.ptr();
      const T* go = out.grad().data();
      T* gz = logits.grad().data();
      for (int i = 0; i < b; ++i) {
        const long off = static_cast<long>(i) * n;
        T dot = 0;
        for (int j = 0; j < n; ++j) dot += go[off + j] * p[off + j];
        for (int j = 0; j < n; ++j) gz[off + j] += p[off + j] * (go[off + j] - dot);
      }
    });
  }
  return finish(std::move(out), "softmax");
}

template <typename T>
Tensor<T> cross_entropy(Tape<T>* tape, const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw DimensionError("cross_entropy: expected [B,n], got " + shape_str(logits.shape()));
  const int b = logits.dim(0);
  const int n = logits.dim(1);
  if (static_cast<int>(labels.size()) != b) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(b));
  }
  for (int y : labels) {
    if (y < 0 || y >= n) throw LabelError("cross_entropy: label " + std::to_string(y) + " outside [0," + std::to_string(n) + ")");
  }
  // Keep the probabilities for the backward pass.
  std::vector<T> probs(static_cast<std::size_t>(b) * n);
  T loss = 0;
  for (int i = 0; i < b; ++i) {
    const T* z = logits.ptr() + static_cast<long>(i) * n;
    T* p = probs.data() + static_cast<long>(i) * n;
    const T zmax = *std::max_element(z, z + n);
    T total = 0;
    for (int j = 0; j < n; ++j) {
      p[j] = std::exp(z[j] - zmax);
      total += p[j];
    }
    for (int j = 0; j < n; ++j) p[j] /= total;
    loss += -(z[labels[i]] - zmax - std::log(total));
  }
  auto out = Tensor<T>::scalar(loss / T(b));
  if (tracks(tape, {&logits})) {
    out.set_requires_grad(true);
    std::vector<int> ys(labels.begin(), labels.end());
    tape->record([logits, out, probs = std::move(probs), ys = std::move(ys), b, n]() {
      const T g = out.grad()[0] / T(b);
      T* gz = logits.grad().data();
      for (int i = 0; i < b; ++i) {
        const long off = static_cast<long>(i) * n;
        for (int j = 0; j < n; ++j) gz[off + j] += g * (probs[off + j] - (j == ys[i] ? T(1) : T(0)));
      }
    });
  }
  return finish(std::move(out), "cross_entropy");
}

template <typename T>
Tensor<T> l1_loss(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "l1_loss");
  const auto as = a.data();
  const auto bs = b.data();
  T acc = 0;
  for (std::size_t i = 0; i < as.size(); ++i) acc += std::abs(as[i] - bs[i]);
  const T n = T(as.size());
  auto out = Tensor<T>::scalar(acc / n);
  if (tracks(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out, n]() {
      const T g = out.grad()[0] / n;
      const auto as = a.data();
      const auto bs = b.data();
      auto sign = [](T d) { return d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)); };
      if (a.requires_grad()) {
        const auto ga = a.grad();
        for (std::size_t i = 0; i < as.size(); ++i) ga[i] += g * sign(as[i] - bs[i]);
      }
      if (b.requires_grad()) {
        const auto gb = b.grad();
        for (std::size_t i = 0; i < as.size(); ++i) gb[i] -= g * sign(as[i] - bs[i]);
      }
    });
  }
  return finish(std::move(out), "l1_loss");
}

template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  auto out = a.detach();
  simd::kernels<T>().axpy(static_cast<int>(out.numel()), T(1), b.ptr(), out.ptr());
  if (tracks(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out]() {
      const auto& kern = simd::kernels<T>();
      const int n = static_cast<int>(out.numel());
      const T* go = out.grad().data();
      if (a.requires_grad()) kern.axpy(n, T(1), go, a.grad().data());
      if (b.requires_grad()) kern.axpy(n, T(1), go, b.grad().data());
    });
  }
  return finish(std::move(out), "add");
}

template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  auto out = a.detach();
  simd::kernels<T>().axpy(static_cast<int>(out.numel()), T(-1), b.ptr(), out.ptr());
  if (tracks(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out]() {
      const auto& kern = simd::kernels<T>();
      const int n = static_cast<int>(out.numel());
      const T* go = out.grad().data();
      if (a.requires_grad()) kern.axpy(n, T(1), go, a.grad().data());
      if (b.requires_grad()) kern.axpy(n, T(-1), go, b.grad().data());
    });
  }
  return finish(std::move(out), "sub");
}

template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  auto out = Tensor<T>::zeros(a.shape());
  const auto as = a.data();
  const auto bs = b.data();
  const auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = as[i] * bs[i];
  if (tracks(tape, {&a, &b})) {
    out.set_requires_grad(true);
    tape->record([a, b, out]() {
      const auto as = a.data();
      const auto bs = b.data();
      const auto go = out.grad();
      if (a.requires_grad()) {
        const auto ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bs[i];
      }
      if (b.requires_grad()) {
        const auto gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * as[i];
      }
    });
  }
  return finish(std::move(out), "mul");
}

template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x) {
  T acc = 0;
  for (T v : x.data()) acc += v;
  auto out = Tensor<T>::scalar(acc);
  if (tracks(tape, {&x})) {
    out.set_requires_grad(true);
    tape->record([x, out]() {
      const T g = out.grad()[0];
      for (T& v : x.grad()) v += g;
    });
  }
  return finish(std::move(out), "sum");
}

template <typename T>
Tensor<T> mean(Tape<T>* tape, const Tensor<T>& x) {
  return scale(tape, sum(tape, x), T(1) / T(x.numel()));
}

#define SLIM_INSTANTIATE_OPS(T)                                                                               \
  template Tensor<T> conv2d(Tape<T>*, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int);            \
  template Tensor<T> conv2d_sliced(Tape<T>*, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
  template Tensor<T> relu(Tape<T>*, const Tensor<T>&);                                                       \
  template Tensor<T> global_avg_pool(Tape<T>*, const Tensor<T>&);                                            \
  template Tensor<T> linear(Tape<T>*, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> softmax(Tape<T>*, const Tensor<T>&);                                                    \
  template Tensor<T> cross_entropy(Tape<T>*, const Tensor<T>&, std::span<const int>);                        \
  template Tensor<T> l1_loss(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> add(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> sub(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> mul(Tape<T>*, const Tensor<T>&, const Tensor<T>&);                                      \
  template Tensor<T> scale(Tape<T>*, const Tensor<T>&, T);                                                   \
  template Tensor<T> add_scalar(Tape<T>*, const Tensor<T>&, T);                                              \
  template Tensor<T> square(Tape<T>*, const Tensor<T>&);                                                     \
  template Tensor<T> sum(Tape<T>*, const Tensor<T>&);                                                        \
  template Tensor<T> mean(Tape<T>*, const Tensor<T>&);

SLIM_INSTANTIATE_OPS(float)
SLIM_INSTANTIATE_OPS(double)

#undef SLIM_INSTANTIATE_OPS

}  // namespace slim::ops
