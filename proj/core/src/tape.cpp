#include "hsinoise/tape.hpp"

#include <stdexcept>

namespace hsinoise {

Tensor Tape::variable(const Tensor& value) {
  if (value.tracked()) {
    throw std::invalid_argument("variable() expects an untracked tensor");
  }
  Tensor out = value.detach();
  nodes_.push_back(Node{out.shape(), {}, nullptr});
  out.tape_ = this;
  out.node_ = nodes_.size() - 1;
  return out;
}

Tensor Tape::record(Tensor value, std::vector<Tensor> inputs, BackwardFn backward) {
  Node node{value.shape(), {}, std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const Tensor& in : inputs) {
    if (in.tape_ && in.tape_ != this) {
      throw std::invalid_argument("operands recorded on different tapes");
    }
    node.inputs.push_back(in.grad_id());
  }
  nodes_.push_back(std::move(node));
  Tensor out = value.detach();
  out.tape_ = this;
  out.node_ = nodes_.size() - 1;
  return out;
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.tape() != this) {
    throw std::invalid_argument("loss is not recorded on this tape");
  }
  if (loss.size() != 1) {
    throw std::invalid_argument("loss must be a scalar, got shape " + shape_string(loss.shape()));
  }

  Gradients result;
  result.tape_ = this;
  result.grads_.resize(nodes_.size());
  result.shapes_.reserve(nodes_.size());
  for (const Node& n : nodes_) result.shapes_.push_back(n.shape);

  const NodeId root = *loss.grad_id();
  result.grads_[root].assign(1, 1.0);

  std::vector<std::span<double>> in_spans;
  for (NodeId id = root + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (result.grads_[id].empty() || !node.backward) continue;

    in_spans.assign(node.inputs.size(), std::span<double>{});
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      const auto& in = node.inputs[i];
      if (!in) continue;
      auto& buf = result.grads_[*in];
      if (buf.empty()) buf.assign(shape_size(nodes_[*in].shape), 0.0);
      in_spans[i] = buf;
    }
    node.backward(result.grads_[id], in_spans);
  }
  return result;
}

Tensor Gradients::of(const Tensor& t) const {
  if (!t.tracked() || t.tape() != tape_) {
    throw std::invalid_argument("gradient requested for a tensor not on this tape");
  }
  const NodeId id = *t.grad_id();
  if (grads_[id].empty()) return Tensor::zeros(shapes_[id]);
  return Tensor::from(shapes_[id], grads_[id]);
}

}  // namespace hsinoise
