#include "hsinoise/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace hsinoise {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) {
    throw std::invalid_argument("tensor shape must have at least one extent");
  }
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) {
      throw std::invalid_argument("tensor extents must be positive, got " + shape_string(shape));
    }
    n *= e;
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : Tensor({1}, std::make_shared<const std::vector<double>>(1, 0.0)) {}

Tensor::Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data)
    : shape_(std::move(shape)), data_(std::move(data)) {}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  const std::size_t n = shape_size(shape);
  if (n != values.size()) {
    throw std::invalid_argument("shape " + shape_string(shape) + " needs " + std::to_string(n) +
                                " values, got " + std::to_string(values.size()));
  }
  return Tensor(std::move(shape), std::make_shared<const std::vector<double>>(std::move(values)));
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::ones(Shape shape) { return filled(std::move(shape), 1.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::make_shared<const std::vector<double>>(n, value));
}

Tensor Tensor::scalar(double value) { return filled({1}, value); }

double Tensor::item() const {
  if (size() != 1) {
    throw std::logic_error("item() on tensor of shape " + shape_string(shape_));
  }
  return (*data_)[0];
}

std::optional<NodeId> Tensor::grad_id() const {
  if (!tape_) return std::nullopt;
  return node_;
}

Tensor Tensor::detach() const { return Tensor(shape_, data_); }

Tensor Tensor::with_shape(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw std::invalid_argument("cannot view " + shape_string(shape_) + " as " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

}  // namespace hsinoise
