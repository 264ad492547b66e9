#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "hsinoise/cube.hpp"
#include "hsinoise/tensor.hpp"

namespace hsinoise {

struct PixelCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  std::uint16_t label = 0;  // 1..C

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Reflects an index into [0, n) without repeating the edge sample
/// (-1 -> 1, n -> n-2), folding repeatedly for large offsets.
std::size_t mirror_index(std::ptrdiff_t i, std::size_t n);

/// bands x w x w window centred on (row, col), borders mirror-reflected.
/// Throws on even w or an unlabeled centre pixel.
Tensor extract_patch(const HSICube& cube, std::size_t row, std::size_t col, std::size_t w);

struct PatchSet {
  std::size_t neighbor_size = 1;
  std::vector<Tensor> patches;  // each [bands, w, w]
  std::vector<std::size_t> labels;  // 0-based class indices
  std::vector<PixelCoord> coords;
};

PatchSet make_patch_set(const HSICube& cube, const std::vector<PixelCoord>& coords, std::size_t w);

struct TrainTestSplit {
  std::vector<PixelCoord> train;
  std::vector<PixelCoord> test;
};

/// Draws exactly `per_class` training pixels per class without replacement;
/// every remaining labeled pixel goes to test. Each class must have more than
/// `per_class` labeled pixels.
TrainTestSplit split_train_test(const HSICube& cube, std::size_t per_class, std::uint64_t seed);

/// CSV with header "row,col,class,role".
void write_split_csv(std::ostream& os, const TrainTestSplit& split);

}  // namespace hsinoise
