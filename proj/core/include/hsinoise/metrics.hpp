#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hsinoise {

/// C x C count matrix, rows = truth, cols = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);
  /// Row-major counts; throws unless counts.size() is a nonzero perfect square.
  static ConfusionMatrix from_counts(std::span<const std::uint64_t> counts);

  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t m) const;
  std::uint64_t col_sum(std::size_t m) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                      std::size_t classes);

struct MetricsReport {
  ConfusionMatrix confusion{1};
  double overall_accuracy = 0.0;
  double average_accuracy = 0.0;
  double kappa = 0.0;
  /// Empty for classes with no samples; those are left out of AA.
  std::vector<std::optional<double>> per_class;
};

/// OA = trace / total; AA = mean per-class recall over present classes;
/// Kappa = (p_o - p_e) / (1 - p_e), reported as 1 when p_e == 1.
/// Throws std::invalid_argument on an empty matrix.
MetricsReport compute_metrics(const ConfusionMatrix& confusion);

}  // namespace hsinoise
