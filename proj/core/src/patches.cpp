#include "hsinoise/patches.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

namespace hsinoise {

std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - m);
}

Tensor extract_patch(const HSICube& cube, std::size_t row, std::size_t col, std::size_t w) {
  if (w % 2 == 0) throw std::invalid_argument("neighbor size must be odd, got " + std::to_string(w));
  if (row >= cube.rows || col >= cube.cols) throw std::out_of_range("pixel outside the cube");
  if (cube.label(row, col) == 0) {
    throw std::invalid_argument("pixel (" + std::to_string(row) + "," + std::to_string(col) + ") is unlabeled");
  }
  const auto half = static_cast<std::ptrdiff_t>(w / 2);
  std::vector<std::size_t> rows(w), cols(w);
  for (std::size_t i = 0; i < w; ++i) {
    const auto offset = static_cast<std::ptrdiff_t>(i) - half;
    rows[i] = mirror_index(static_cast<std::ptrdiff_t>(row) + offset, cube.rows);
    cols[i] = mirror_index(static_cast<std::ptrdiff_t>(col) + offset, cube.cols);
  }
  std::vector<double> values(cube.bands * w * w);
  for (std::size_t b = 0; b < cube.bands; ++b)
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) values[(b * w + i) * w + j] = cube.at(b, rows[i], cols[j]);
  return Tensor::from({cube.bands, w, w}, std::move(values));
}

PatchSet make_patch_set(const HSICube& cube, const std::vector<PixelCoord>& coords, std::size_t w) {
  PatchSet set;
  set.neighbor_size = w;
  set.coords = coords;
  set.patches.reserve(coords.size());
  set.labels.reserve(coords.size());
  for (const auto& c : coords) {
    set.patches.push_back(extract_patch(cube, c.row, c.col, w));
    set.labels.push_back(static_cast<std::size_t>(cube.label(c.row, c.col)) - 1);
  }
  return set;
}

TrainTestSplit split_train_test(const HSICube& cube, std::size_t per_class, std::uint64_t seed) {
  std::vector<std::vector<PixelCoord>> by_class(cube.num_classes);
  for (std::size_t r = 0; r < cube.rows; ++r)
    for (std::size_t c = 0; c < cube.cols; ++c) {
      const auto l = cube.label(r, c);
      if (l != 0) by_class[l - 1].push_back({r, c, l});
    }

  std::mt19937_64 rng(seed);
  TrainTestSplit split;
  for (std::size_t m = 0; m < by_class.size(); ++m) {
    auto& pixels = by_class[m];
    if (pixels.size() <= per_class) {
      throw std::invalid_argument("class " + std::to_string(m + 1) + " has " + std::to_string(pixels.size()) +
                                  " labeled pixels; need more than " + std::to_string(per_class));
    }
    // Partial Fisher-Yates: the first per_class entries become the draw.
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (pixels.size() - i));
      std::swap(pixels[i], pixels[j]);
    }
    split.train.insert(split.train.end(), pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(per_class));
    split.test.insert(split.test.end(), pixels.begin() + static_cast<std::ptrdiff_t>(per_class), pixels.end());
  }
  auto row_major = [](const PixelCoord& a, const PixelCoord& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  };
  std::sort(split.test.begin(), split.test.end(), row_major);
  return split;
}

void write_split_csv(std::ostream& os, const TrainTestSplit& split) {
  os << "row,col,class,role\n";
  for (const auto& p : split.train) os << p.row << ',' << p.col << ',' << p.label << ",train\n";
  for (const auto& p : split.test) os << p.row << ',' << p.col << ',' << p.label << ",test\n";
}

}  // namespace hsinoise
