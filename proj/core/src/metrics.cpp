#include "hsinoise/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hsinoise {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::from_counts(std::span<const std::uint64_t> counts) {
  const auto c = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(counts.size()))));
  if (counts.empty() || c * c != counts.size()) {
    throw std::invalid_argument("confusion matrix must be square, got " + std::to_string(counts.size()) +
                                " entries");
  }
  ConfusionMatrix m(c);
  m.counts_.assign(counts.begin(), counts.end());
  return m;
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  if (truth >= classes_ || predicted >= classes_) throw std::out_of_range("class index out of range");
  counts_[truth * classes_ + predicted] += n;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto v : counts_) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t m) const {
  std::uint64_t t = 0;
  for (std::size_t j = 0; j < classes_; ++j) t += at(m, j);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t m) const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < classes_; ++i) t += at(i, m);
  return t;
}

ConfusionMatrix tally(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                      std::size_t classes) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("tally: length mismatch");
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
  return m;
}

MetricsReport compute_metrics(const ConfusionMatrix& confusion) {
  const std::uint64_t total = confusion.total();
  if (total == 0) throw std::invalid_argument("compute_metrics: confusion matrix is empty");
  const std::size_t C = confusion.classes();
  const double n = static_cast<double>(total);

  MetricsReport r;
  r.confusion = confusion;
  r.per_class.resize(C);

  std::uint64_t trace = 0;
  double pe = 0.0;
  double aa_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t m = 0; m < C; ++m) {
    trace += confusion.at(m, m);
    const std::uint64_t row = confusion.row_sum(m);
    pe += static_cast<double>(row) * static_cast<double>(confusion.col_sum(m));
    if (row > 0) {
      const double acc = static_cast<double>(confusion.at(m, m)) / static_cast<double>(row);
      r.per_class[m] = acc;
      aa_sum += acc;
      ++present;
    }
  }
  pe /= n * n;
  r.overall_accuracy = static_cast<double>(trace) / n;
  r.average_accuracy = aa_sum / static_cast<double>(present);
  r.kappa = pe == 1.0 ? 1.0 : (r.overall_accuracy - pe) / (1.0 - pe);
  return r;
}

}  // namespace hsinoise
