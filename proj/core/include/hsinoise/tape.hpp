#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hsinoise/tensor.hpp"

namespace hsinoise {

/// Accumulates into each input gradient buffer. A buffer is empty when the
/// corresponding input does not require a gradient.
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<const std::span<double>> grad_in)>;

/// Result of a backward pass: one gradient buffer per node reached from the
/// loss.
class Gradients {
 public:
  Gradients() = default;

  /// Gradient of the loss with respect to `t`. Tracked tensors the loss does
  /// not depend on get a zero gradient.
  Tensor of(const Tensor& t) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<std::vector<double>> grads_;
  std::vector<Shape> shapes_;
};

/// Append-only record of primitive applications (define-by-run).
///
/// Nodes are stored in creation order, so every node's inputs precede it.
/// One tape per forward pass; a tape must not be shared between threads.
/// Tensors recorded on a tape hold a raw pointer to it, so the tape must
/// outlive them (and must not move while they are in use).
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers `value` as a differentiable leaf.
  Tensor variable(const Tensor& value);

  /// Records `value` as the output of a primitive over `inputs`. Inputs that
  /// are untracked are treated as constants. Used by the ops in ops.hpp.
  Tensor record(Tensor value, std::vector<Tensor> inputs, BackwardFn backward);

  /// Reverse sweep seeded with 1.0 at `loss`. Each node is visited once.
  Gradients backward(const Tensor& loss) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<std::optional<NodeId>> inputs;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace hsinoise
