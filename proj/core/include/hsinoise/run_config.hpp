#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "hsinoise/cube.hpp"
#include "hsinoise/model.hpp"
#include "hsinoise/noise_space.hpp"

namespace hsinoise {

/// Everything a training or evaluation run needs. Defaults are desk-scale
/// (k = d = 64); the published setting is k = 1024, d = 400.
struct RunConfig {
  std::filesystem::path cube_path;
  std::filesystem::path checkpoint_path;  // empty: <output_dir>/model.hdnm
  std::filesystem::path output_dir = ".";

  std::size_t num_bases = 64;     // k
  std::size_t feature_dim = 64;   // d
  std::size_t neighbor_size = 5;  // w
  double lr = 1e-4;
  std::size_t batch = 4;
  double alpha = 1.0;
  double beta = 0.9;
  double lambda_c = 0.01;
  double gamma = 0.5;
  std::size_t epochs = 30;
  std::size_t per_class = 200;
  std::size_t eval_subset = 400;  // held-out pixels scored each epoch
  std::uint64_t seed = 1;
  UpdateSign update_sign = UpdateSign::descent;
  bool baseline = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  std::filesystem::path resolved_checkpoint() const;

  /// Model configuration for a cube with the given bands and classes.
  ModelConfig model_config(const HSICube& cube) const;
};

UpdateSign parse_update_sign(const std::string& text);
std::string to_string(UpdateSign sign);

}  // namespace hsinoise
