#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hsinoise/noise_space.hpp"
#include "hsinoise/tape.hpp"
#include "hsinoise/tensor.hpp"

namespace hsinoise {

/// Architecture and loss settings. Conv kernel extents are nominal
/// (spectral, row, col); each is clamped to the extent of the tensor it
/// slides over, so small patches (w = 1) and few bands still work.
struct ModelConfig {
  std::size_t bands = 32;
  std::size_t neighbor_size = 5;
  std::size_t num_classes = 4;
  std::size_t feature_dim = 64;  // d
  std::size_t num_bases = 64;    // k
  std::size_t conv1_kernels = 8;
  std::array<std::size_t, 3> conv1_extent{7, 3, 3};
  std::size_t conv2_kernels = 16;
  std::array<std::size_t, 3> conv2_extent{5, 2, 2};
  bool baseline = false;  // disables the noise module
  NoiseSpaceOptions noise;
  double lambda_c = 0.01;  // weight of the center loss
  double gamma = 0.5;      // center update rate

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Parameters trained by backpropagation.
struct NetworkParams {
  Tensor conv1_w, conv1_b;      // [K1,1,d,h,w], [K1]
  Tensor conv2_w, conv2_b;      // [K2,K1,d,h,w], [K2]
  Tensor fc_w, fc_b;            // [d, F], [d]
  Tensor extractor_w, extractor_b;  // [d, d], [d]
  Tensor head_w, head_b;        // [d, C], [C]

  static constexpr std::array<const char*, 10> kNames{
      "backbone.conv1.weight", "backbone.conv1.bias", "backbone.conv2.weight", "backbone.conv2.bias",
      "backbone.fc.weight",    "backbone.fc.bias",    "extractor.weight",      "extractor.bias",
      "head.weight",           "head.bias"};

  std::array<Tensor*, 10> entries();
  std::array<const Tensor*, 10> entries() const;

  /// Copy with every parameter registered as a leaf on `tape`.
  NetworkParams track(Tape& tape) const;
};

/// One center per class (row-major C x d) and the moving-average rate.
struct CenterBank {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> centers;
  double gamma = 0.5;

  std::span<const double> center(std::size_t m) const { return {centers.data() + m * dim, dim}; }

  friend bool operator==(const CenterBank&, const CenterBank&) = default;
};

struct ModelState {
  ModelConfig config;
  NetworkParams params;
  NoiseSpace noise_space;
  CenterBank centers;
};

/// Seeded initialisation. Backbone and head are drawn before the extractor
/// and noise space, so a baseline and a full model built from the same seed
/// share their backbone and head.
ModelState init_model(const ModelConfig& config, std::uint64_t seed);

/// True when every stored value in the state is finite.
bool all_finite(const ModelState& state);

bool bitwise_equal(const ModelState& a, const ModelState& b);

/// patch [bands, w, w] -> features phi(x) [d].
Tensor backbone_forward(const Tensor& patch, const NetworkParams& params, const ModelConfig& config);

/// f_clean = phi(x) - n_res
Tensor denoise(const Tensor& features, const Tensor& reconstructed);

struct ForwardPass {
  Tensor features;       // phi(x)
  Tensor extracted;      // n_f (features when baseline)
  Tensor reconstructed;  // n_res (zeros when baseline or degenerate)
  Tensor clean;          // f_clean
  Tensor logits;         // [C]
  bool degenerate = true;
};

/// Full forward of one patch. Pass tracked params to record on a tape.
ForwardPass forward(const ModelState& state, const NetworkParams& params, const Tensor& patch);

/// 1/2 * sum_b ||clean_b - c_{label_b}||^2; centers are constants.
Tensor center_loss(std::span<const Tensor> clean, std::span<const std::size_t> labels, const CenterBank& centers);

/// For each class present: c_m <- c_m - gamma * mean(c_m - f). Others unchanged.
CenterBank update_centers(const CenterBank& centers, std::span<const std::vector<double>> clean,
                          std::span<const std::size_t> labels);

/// mean_b CE(logits_b, label_b) + lambda_c * center
Tensor total_loss(std::span<const Tensor> logits, std::span<const std::size_t> labels, const Tensor& center,
                  double lambda_c);

struct TrainBatch {
  std::vector<Tensor> patches;      // each [bands, w, w]
  std::vector<std::size_t> labels;  // 0-based
};

/// Total loss of a batch under `params` (tracked or constant).
Tensor batch_loss(const ModelState& state, const NetworkParams& params, const TrainBatch& batch);

struct StepReport {
  double cross_entropy = 0.0;  // batch mean
  double center = 0.0;         // L_C over the batch
  double total = 0.0;
  double reconstruction = 0.0; // batch mean of L_r
  double sparsity = 0.0;       // batch mean of L_s
  double diversity = 0.0;      // L_d of the space used in the step
  std::size_t degenerate = 0;  // samples whose estimate fell back to zero
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Forward, backward, SGD on network params, center update, then the
/// noise-space update. Throws NonFiniteLossError (state untouched) when the
/// loss or any gradient is not finite.
std::pair<ModelState, StepReport> train_step(const ModelState& state, const TrainBatch& batch, double lr);

/// Loss terms of a batch without updating anything.
StepReport evaluate_batch(const ModelState& state, const TrainBatch& batch);

/// Index of the largest logit.
std::size_t predict(const ModelState& state, const Tensor& patch);

}  // namespace hsinoise
