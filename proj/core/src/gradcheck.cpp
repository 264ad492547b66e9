#include "hsinoise/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsinoise {

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  std::vector<double> probe = x.to_vector();
  std::vector<double> grad(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(Tensor::from(x.shape(), probe));
    probe[i] = orig - h;
    const double down = f(Tensor::from(x.shape(), probe));
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return Tensor::from(x.shape(), std::move(grad));
}

double gradient_relative_error(const Tensor& analytic, const Tensor& numeric) {
  if (analytic.size() != numeric.size()) {
    throw std::invalid_argument("gradient_relative_error: size mismatch");
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    peak = std::max({peak, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  if (peak == 0.0) return 0.0;
  const double floor = 1e-3 * peak;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace hsinoise
