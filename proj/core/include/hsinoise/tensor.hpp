#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hsinoise {

using Shape = std::vector<std::size_t>;
using NodeId = std::size_t;

class Tape;

/// Number of elements described by a shape. Throws on zero extents.
std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Immutable dense row-major array of doubles.
///
/// A tensor is either a constant (no tape) or a tracked value produced on a
/// Tape. Copies share the underlying buffer; nothing ever writes through it
/// after construction, so tensors can be passed freely between threads.
/// Scalars are represented with shape {1}.
class Tensor {
 public:
  Tensor();

  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_->size(); }
  std::span<const double> values() const { return *data_; }
  std::vector<double> to_vector() const { return *data_; }
  double operator[](std::size_t i) const { return (*data_)[i]; }

  /// Value of a single-element tensor.
  double item() const;

  bool tracked() const { return tape_ != nullptr; }
  std::optional<NodeId> grad_id() const;
  Tape* tape() const { return tape_; }

  /// Same values, no tape handle.
  Tensor detach() const;

  /// Same buffer viewed with a different shape of equal size (constant).
  Tensor with_shape(Shape shape) const;

 private:
  friend class Tape;

  Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data);

  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  Tape* tape_ = nullptr;
  NodeId node_ = 0;
};

/// Free-function constructor mirroring Tensor::from.
inline Tensor tensor(Shape shape, std::vector<double> values) {
  return Tensor::from(std::move(shape), std::move(values));
}

}  // namespace hsinoise
