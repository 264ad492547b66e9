#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hsinoise/cube.hpp"

namespace hsinoise {

/// Scalar knobs for a synthetic scene.
struct SceneParams {
  std::size_t num_classes = 4;
  std::size_t bands = 32;
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t true_bases = 8;       // k* generator-side base noises
  double noise_amplitude = 8.0;     // lambda_i ~ U(-1, 1) * noise_amplitude
  double white_noise_sigma = 0.5;   // sensor noise std per band
  std::size_t region_size = 8;      // side of square class blocks
  std::uint64_t seed = 1;
};

/// Fully materialised generator description: class signatures s^m and the
/// generator-side noise bases, each of length `bands`.
struct SceneSpec {
  SceneParams params;
  std::vector<std::vector<double>> signatures;  // C vectors
  std::vector<std::vector<double>> true_bases;  // k* unit vectors

  /// Throws std::invalid_argument when the spec is inconsistent.
  void validate() const;
};

/// Gaussian-bump signatures (unit peak, distinct centre and width per class)
/// and unit-norm random bases drawn from `params.seed`.
SceneSpec make_scene_spec(const SceneParams& params);

/// Each pixel of class m: s^m + sum_i lambda_i n_i + w, with lambda drawn per
/// pixel and w ~ N(0, sigma^2) per band. Blocks of region_size are assigned
/// classes cyclically along anti-diagonals.
HSICube generate_scene(const SceneSpec& spec);

/// Class (1-based) of the block containing (row, col).
std::uint16_t block_class(const SceneParams& params, std::size_t row, std::size_t col);

}  // namespace hsinoise
