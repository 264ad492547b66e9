#pragma once

#include <functional>

#include "hsinoise/tensor.hpp"

namespace hsinoise {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h = 1e-5);

/// Largest coordinate-wise relative error between two gradients.
///
/// Each coordinate is scaled by max(|a_i|, |b_i|, 1e-3 * G), where G is the
/// largest magnitude in either gradient. The floor keeps coordinates whose
/// true value is ~0 from being dominated by finite-difference round-off.
double gradient_relative_error(const Tensor& analytic, const Tensor& numeric);

}  // namespace hsinoise
