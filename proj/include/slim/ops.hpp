// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

#include "slim/tensor.hpp"

// Differentiable ops. Every op takes the tape it should record on; pass
// nullptr for inference. An op records a backward node only when a tape is
// given and at least one input requires grad, and its output then requires
// grad as well.
namespace slim::ops {

/// Stride-1 "same" cross-correlation. input [B,Cin,H,W], weight
/// [Cout,Cin,k,k], bias [Cout] or undefined; pad must equal k/2.
template <typename T>
Tensor<T> conv2d(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int pad);

/// Convolution over the weight sub-block [0:rho_out, 0:rho_in] and bias
/// prefix [0:rho_out] of a full-width store. input [B,rho_in,H,W] ->
/// [B,rho_out,H,W]. Gradients only touch the sub-block. Throws WidthError
/// when a width exceeds the store.
template <typename T>
Tensor<T> conv2d_sliced(Tape<T>* tape, const Tensor<T>& input, const Tensor<T>& weight,
                        const Tensor<T>& bias, int rho_in, int rho_out);

template <typename T>
Tensor<T> relu(Tape<T>* tape, const Tensor<T>& x);

/// [B,C,H,W] -> [B,C], mean over each plane.
template <typename T>
Tensor<T> global_avg_pool(Tape<T>* tape, const Tensor<T>& x);

/// [B,din] x weight [dout,din] + bias [dout] -> [B,dout]. bias may be undefined.
template <typename T>
Tensor<T> linear(Tape<T>* tape, const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Row-wise softmax over [B,n], max-subtracted.
template <typename T>
Tensor<T> softmax(Tape<T>* tape, const Tensor<T>& logits);

/// Batch mean of -log softmax(logits)[label]. Throws LabelError on a label
/// outside [0,n).
template <typename T>
Tensor<T> cross_entropy(Tape<T>* tape, const Tensor<T>& logits, std::span<const int> labels);

/// Mean absolute difference. Subgradient at exact ties is 0.
template <typename T>
Tensor<T> l1_loss(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);

// Elementwise helpers; shapes must match exactly (no broadcasting).
template <typename T>
Tensor<T> add(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(Tape<T>* tape, const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(Tape<T>* tape, const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> add_scalar(Tape<T>* tape, const Tensor<T>& x, T value);
template <typename T>
Tensor<T> square(Tape<T>* tape, const Tensor<T>& x);

/// Reductions to a scalar (shape []).
template <typename T>
Tensor<T> sum(Tape<T>* tape, const Tensor<T>& x);
template <typename T>
Tensor<T> mean(Tape<T>* tape, const Tensor<T>& x);

}  // namespace slim::ops
