#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "hsinoise/binary_io.hpp"
#include "hsinoise/cube.hpp"

namespace hsinoise {
namespace {

constexpr char kMagic[5] = "HSIC";
// Keeps a corrupt header from requesting an absurd allocation.
constexpr std::uint64_t kMaxCubeElements = 1ull << 31;

}  // namespace

void HSICube::validate() const {
  if (bands == 0 || rows == 0 || cols == 0) throw std::invalid_argument("cube extents must be positive");
  if (num_classes > 0xffff) throw std::invalid_argument("too many classes for u16 labels");
  if (radiance.size() != bands * rows * cols) throw std::invalid_argument("radiance size does not match extents");
  if (labels.size() != rows * cols) throw std::invalid_argument("label size does not match extents");
  for (auto l : labels) {
    if (l > num_classes) {
      throw std::invalid_argument("label " + std::to_string(l) + " exceeds class count " +
                                  std::to_string(num_classes));
    }
  }
  for (double v : radiance) {
    if (!std::isfinite(v)) throw std::invalid_argument("radiance must be finite");
  }
}

void write_cube(std::ostream& os, const HSICube& cube) {
  cube.validate();
  binary::write_magic(os, kMagic);
  binary::write_u32(os, kCubeFormatVersion);
  binary::write_u32(os, static_cast<std::uint32_t>(cube.bands));
  binary::write_u32(os, static_cast<std::uint32_t>(cube.rows));
  binary::write_u32(os, static_cast<std::uint32_t>(cube.cols));
  binary::write_u32(os, static_cast<std::uint32_t>(cube.num_classes));
  for (double v : cube.radiance) binary::write_f64(os, v);
  for (auto l : cube.labels) binary::write_u16(os, l);
}

HSICube read_cube(std::istream& is) {
  binary::expect_magic(is, kMagic);
  const auto version = binary::read_u32(is, "cube version");
  if (version != kCubeFormatVersion) {
    throw FormatError("unsupported cube format version " + std::to_string(version));
  }
  HSICube cube;
  cube.bands = binary::read_u32(is, "bands");
  cube.rows = binary::read_u32(is, "rows");
  cube.cols = binary::read_u32(is, "cols");
  cube.num_classes = binary::read_u32(is, "class count");
  const std::uint64_t pixels = static_cast<std::uint64_t>(cube.rows) * cube.cols;
  const std::uint64_t elements = pixels * cube.bands;
  if (elements == 0) throw FormatError("cube has a zero extent");
  if (pixels > kMaxCubeElements || elements > kMaxCubeElements || elements / cube.bands != pixels) {
    throw FormatError("cube extents overflow");
  }
  if (cube.num_classes > 0xffff) throw FormatError("class count exceeds u16 label range");
  cube.radiance.resize(elements);
  for (double& v : cube.radiance) v = binary::read_f64(is, "radiance payload");
  cube.labels.resize(pixels);
  for (auto& l : cube.labels) l = binary::read_u16(is, "label payload");
  try {
    cube.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid cube contents: ") + e.what());
  }
  return cube;
}

void save_cube(const HSICube& cube, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_cube(os, cube);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

HSICube load_cube(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_cube(is);
}

}  // namespace hsinoise
