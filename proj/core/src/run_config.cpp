#include "hsinoise/run_config.hpp"

#include <cmath>
#include <stdexcept>

namespace hsinoise {

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (num_bases < 1) fail("k must be >= 1");
  if (feature_dim < 1) fail("d must be >= 1");
  if (neighbor_size % 2 == 0) fail("neighbor-size must be odd");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be a finite value >= 0");
  if (batch < 1) fail("batch must be >= 1");
  if (!(alpha >= 0.0)) fail("alpha must be >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
  if (!(lambda_c >= 0.0)) fail("lambda-c must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (per_class < 1) fail("per-class must be >= 1");
  if (eval_subset < 1) fail("eval-subset must be >= 1");
}

std::filesystem::path RunConfig::resolved_checkpoint() const {
  return checkpoint_path.empty() ? output_dir / "model.hdnm" : checkpoint_path;
}

ModelConfig RunConfig::model_config(const HSICube& cube) const {
  ModelConfig m;
  m.bands = cube.bands;
  m.num_classes = cube.num_classes;
  m.neighbor_size = neighbor_size;
  m.feature_dim = feature_dim;
  m.num_bases = num_bases;
  m.baseline = baseline;
  m.noise.alpha = alpha;
  m.noise.beta = beta;
  m.noise.update_sign = update_sign;
  m.lambda_c = lambda_c;
  m.gamma = gamma;
  return m;
}

UpdateSign parse_update_sign(const std::string& text) {
  if (text == "descent") return UpdateSign::descent;
  if (text == "as-written") return UpdateSign::as_written;
  throw std::invalid_argument("update-sign must be 'descent' or 'as-written', got '" + text + "'");
}

std::string to_string(UpdateSign sign) { return sign == UpdateSign::descent ? "descent" : "as-written"; }

}  // namespace hsinoise
