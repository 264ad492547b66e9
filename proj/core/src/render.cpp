#include "hsinoise/render.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

#include "hsinoise/patches.hpp"

namespace hsinoise {
namespace {

constexpr std::array<Rgb, 17> kPalette{{
    {0, 0, 0},
    {230, 25, 75},
    {60, 180, 75},
    {255, 225, 25},
    {0, 130, 200},
    {245, 130, 48},
    {145, 30, 180},
    {70, 240, 240},
    {240, 50, 230},
    {210, 245, 60},
    {250, 190, 212},
    {0, 128, 128},
    {220, 190, 255},
    {170, 110, 40},
    {255, 250, 200},
    {128, 0, 0},
    {170, 255, 195},
}};

}  // namespace

std::span<const Rgb> default_palette() { return kPalette; }

void write_ppm(std::ostream& os, std::size_t rows, std::size_t cols, std::span<const std::uint16_t> labels,
               std::span<const Rgb> palette) {
  if (labels.size() != rows * cols) throw std::invalid_argument("label map size does not match rows x cols");
  os << "P6\n" << cols << ' ' << rows << "\n255\n";
  for (auto l : labels) {
    if (l >= palette.size()) {
      throw std::invalid_argument("palette has no colour for class " + std::to_string(l));
    }
    os.write(reinterpret_cast<const char*>(palette[l].data()), 3);
  }
}

std::vector<std::uint16_t> predict_map(const ModelState& state, const HSICube& cube) {
  std::vector<std::uint16_t> out(cube.rows * cube.cols, 0);
  for (std::size_t r = 0; r < cube.rows; ++r)
    for (std::size_t c = 0; c < cube.cols; ++c) {
      if (cube.label(r, c) == 0) continue;
      const Tensor patch = extract_patch(cube, r, c, state.config.neighbor_size);
      out[r * cube.cols + c] = static_cast<std::uint16_t>(predict(state, patch) + 1);
    }
  return out;
}

void render_map(const HSICube& cube, std::span<const std::uint16_t> labels, std::span<const Rgb> palette,
                const std::filesystem::path& path) {
  if (palette.size() < cube.num_classes + 1) {
    throw std::invalid_argument("palette needs " + std::to_string(cube.num_classes + 1) + " entries");
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_ppm(os, cube.rows, cube.cols, labels, palette);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace hsinoise
