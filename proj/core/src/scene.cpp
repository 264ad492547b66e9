#include "hsinoise/scene.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace hsinoise {
namespace {

// Separate PRNG streams so changing the pixel recipe never changes the bases.
constexpr std::uint64_t kBaseStream = 0x5eed0001;
constexpr std::uint64_t kPixelStream = 0x5eed0002;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

}  // namespace

void SceneSpec::validate() const {
  const auto& p = params;
  if (p.num_classes == 0 || p.bands == 0 || p.rows == 0 || p.cols == 0) {
    throw std::invalid_argument("scene extents and class count must be positive");
  }
  if (p.num_classes > 0xffff) throw std::invalid_argument("too many classes");
  if (p.true_bases == 0) throw std::invalid_argument("scene needs at least one true base noise");
  if (p.region_size == 0 || p.region_size > p.rows || p.region_size > p.cols) {
    throw std::invalid_argument("region size " + std::to_string(p.region_size) + " does not fit a " +
                                std::to_string(p.rows) + "x" + std::to_string(p.cols) + " grid");
  }
  if (!(p.noise_amplitude >= 0.0) || !(p.white_noise_sigma >= 0.0)) {
    throw std::invalid_argument("noise amplitudes must be non-negative");
  }
  if (signatures.size() != p.num_classes || true_bases.size() != p.true_bases) {
    throw std::invalid_argument("scene spec vectors do not match its parameters");
  }
  for (const auto& s : signatures)
    if (s.size() != p.bands) throw std::invalid_argument("signature length must equal band count");
  for (const auto& b : true_bases)
    if (b.size() != p.bands) throw std::invalid_argument("base noise length must equal band count");
  for (std::size_t a = 0; a < signatures.size(); ++a)
    for (std::size_t b = a + 1; b < signatures.size(); ++b)
      if (signatures[a] == signatures[b]) throw std::invalid_argument("class signatures must be distinct");
}

SceneSpec make_scene_spec(const SceneParams& params) {
  SceneSpec spec;
  spec.params = params;
  const double bands = static_cast<double>(params.bands);
  const double classes = static_cast<double>(params.num_classes);

  for (std::size_t m = 0; m < params.num_classes; ++m) {
    // Centres spread across the middle of the band axis; alternating widths
    // make neighbouring classes overlap unevenly.
    const double frac = params.num_classes > 1 ? static_cast<double>(m) / (classes - 1.0) : 0.5;
    const double centre = bands * (0.3 + 0.4 * frac);
    const double width = bands * (m % 2 == 0 ? 0.15 : 0.2);
    std::vector<double> sig(params.bands);
    for (std::size_t b = 0; b < params.bands; ++b) {
      const double z = (static_cast<double>(b) - centre) / width;
      sig[b] = std::exp(-0.5 * z * z);
    }
    spec.signatures.push_back(std::move(sig));
  }

  auto rng = stream(params.seed, kBaseStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < params.true_bases; ++i) {
    std::vector<double> base(params.bands);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : base) {
        v = gauss(rng);
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : base) v /= norm;
    spec.true_bases.push_back(std::move(base));
  }
  spec.validate();
  return spec;
}

std::uint16_t block_class(const SceneParams& params, std::size_t row, std::size_t col) {
  const std::size_t br = row / params.region_size;
  const std::size_t bc = col / params.region_size;
  return static_cast<std::uint16_t>((br + bc) % params.num_classes + 1);
}

HSICube generate_scene(const SceneSpec& spec) {
  spec.validate();
  const auto& p = spec.params;
  HSICube cube;
  cube.bands = p.bands;
  cube.rows = p.rows;
  cube.cols = p.cols;
  cube.num_classes = p.num_classes;
  cube.radiance.assign(p.bands * p.rows * p.cols, 0.0);
  cube.labels.assign(p.rows * p.cols, 0);

  auto rng = stream(p.seed, kPixelStream);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> pixel(p.bands);

  for (std::size_t r = 0; r < p.rows; ++r) {
    for (std::size_t c = 0; c < p.cols; ++c) {
      const std::uint16_t cls = block_class(p, r, c);
      cube.labels[r * p.cols + c] = cls;
      pixel = spec.signatures[cls - 1];
      for (const auto& base : spec.true_bases) {
        const double lambda = uniform(rng) * p.noise_amplitude;
        for (std::size_t b = 0; b < p.bands; ++b) pixel[b] += lambda * base[b];
      }
      for (std::size_t b = 0; b < p.bands; ++b) {
        const double w = gauss(rng);
        pixel[b] += p.white_noise_sigma * w;
      }
      for (std::size_t b = 0; b < p.bands; ++b) cube.radiance[(b * p.rows + r) * p.cols + c] = pixel[b];
    }
  }
  return cube;
}

}  // namespace hsinoise
