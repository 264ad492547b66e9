#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "hsinoise/cube.hpp"
#include "hsinoise/model.hpp"

namespace hsinoise {

using Rgb = std::array<std::uint8_t, 3>;

/// Index 0 (unlabeled) is black; indices 1..16 are fixed class colours.
std::span<const Rgb> default_palette();

/// Binary PPM (P6), one pixel per label, colours looked up in `palette`.
/// Throws if any label has no palette entry.
void write_ppm(std::ostream& os, std::size_t rows, std::size_t cols, std::span<const std::uint16_t> labels,
               std::span<const Rgb> palette);

/// Predicted class (1-based) for every labeled pixel; 0 where unlabeled.
std::vector<std::uint16_t> predict_map(const ModelState& state, const HSICube& cube);

/// Renders `labels` (e.g. cube.labels or predict_map output) to `path`.
void render_map(const HSICube& cube, std::span<const std::uint16_t> labels, std::span<const Rgb> palette,
                const std::filesystem::path& path);

}  // namespace hsinoise
