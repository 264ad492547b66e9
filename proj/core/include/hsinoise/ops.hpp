#pragma once

#include <cstddef>

#include "hsinoise/tape.hpp"
#include "hsinoise/tensor.hpp"

// Differentiable primitives. Each op returns a constant when none of its
// operands is tracked, and otherwise records a node on the operands' tape.
// Shape errors throw std::invalid_argument. No op writes to its inputs.

namespace hsinoise {

/// [m,n] x [n,p] -> [m,p]
Tensor matmul(const Tensor& a, const Tensor& b);

/// Valid (unpadded) 3-D convolution, cross-correlation form.
/// input [C,D,H,W], kernels [K,C,d,h,w] -> [K,(D-d)/s+1,(H-h)/s+1,(W-w)/s+1]
Tensor conv3d(const Tensor& input, const Tensor& kernels, std::size_t stride = 1);

/// Adds bias[c] to every element of channel c of x (channel = leading axis).
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a * s where s is a single-element tensor.
Tensor scale(const Tensor& a, const Tensor& s);
/// a / s where s is a single-element tensor. s must be nonzero.
Tensor divide(const Tensor& a, const Tensor& s);
/// max(x, 0); the subgradient at exactly 0 is 0.
Tensor relu(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor dot(const Tensor& a, const Tensor& b);
/// Euclidean norm. Returns 0 with zero gradient at the zero vector.
Tensor l2_norm(const Tensor& x);

/// -log softmax(logits)[label], computed with the max subtracted first.
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label);

}  // namespace hsinoise
