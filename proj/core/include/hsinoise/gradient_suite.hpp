#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hsinoise/noise_space.hpp"

namespace hsinoise {

/// Outcome of one finite-difference suite.
struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

using NoiseGradientFn =
    std::function<std::vector<double>(const NoiseSpace&, std::span<const double>, std::span<const double>)>;
using DiversityGradientFn = std::function<std::vector<double>(const NoiseSpace&)>;

/// Every primitive op against central differences (h = 1e-5) on random
/// tensors with extents <= 6. Threshold 1e-4.
SuiteResult check_primitive_gradients(std::uint64_t seed, std::size_t trials = 100);

/// A composed graph (conv -> relu -> matmul -> norm/softmax) on one tape.
/// Threshold 1e-4.
SuiteResult check_composed_gradient(std::uint64_t seed, std::size_t trials = 20);

/// Analytic base gradient against central differences of
/// ||n_f - sum lambda_j n_j||^2 + alpha * L_d with lambda frozen (k <= 8,
/// d <= 16). Threshold 1e-4.
SuiteResult check_noise_space_gradient(std::uint64_t seed, std::size_t instances = 100,
                                       const NoiseGradientFn& gradient = noise_space_gradient);

/// Diversity gradient against brute-force differentiation of the ordered
/// double sum. Threshold 1e-12.
SuiteResult check_diversity_gradient(std::uint64_t seed, std::size_t instances = 100,
                                     const DiversityGradientFn& gradient = diversity_gradient);

/// Center loss gradient with respect to the clean features. Threshold 1e-5.
SuiteResult check_center_loss_gradient(std::uint64_t seed, std::size_t trials = 20);

/// End-to-end total loss of a tiny model (d = 8, k = 4, C = 2, 4 bands,
/// 3x3 patch) with respect to every network parameter. Threshold 1e-3.
SuiteResult check_model_gradient(std::uint64_t seed);

/// All of the above with default arguments.
std::vector<SuiteResult> check_gradients(std::uint64_t seed = 2024);

/// One line per suite: status, name, case count, max rel err, threshold.
void print_suite_report(std::ostream& os, const std::vector<SuiteResult>& results);

}  // namespace hsinoise
