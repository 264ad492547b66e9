#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hsinoise {

/// A bands x rows x cols radiance cube with per-pixel class labels.
/// Label 0 marks an unlabeled pixel; classes are 1..num_classes.
struct HSICube {
  std::size_t bands = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t num_classes = 0;
  std::vector<double> radiance;        // band-outermost, then row, then col
  std::vector<std::uint16_t> labels;   // row-major

  double at(std::size_t band, std::size_t row, std::size_t col) const {
    return radiance[(band * rows + row) * cols + col];
  }
  std::uint16_t label(std::size_t row, std::size_t col) const { return labels[row * cols + col]; }

  /// Throws std::invalid_argument if extents, labels or radiance are invalid.
  void validate() const;

  friend bool operator==(const HSICube&, const HSICube&) = default;
};

inline constexpr std::uint32_t kCubeFormatVersion = 1;
/// Bytes before the radiance payload: magic, version, bands, rows, cols, C.
inline constexpr std::size_t kCubeHeaderBytes = 4 + 5 * 4;

/// "HSIC" little-endian format: magic, version u32, bands u32, rows u32,
/// cols u32, C u32, radiance f64 (band-outermost), labels u16 (row-major).
void write_cube(std::ostream& os, const HSICube& cube);
HSICube read_cube(std::istream& is);

void save_cube(const HSICube& cube, const std::filesystem::path& path);
HSICube load_cube(const std::filesystem::path& path);

}  // namespace hsinoise
