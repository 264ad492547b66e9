#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "hsinoise/tensor.hpp"

namespace hsinoise {

/// Direction of the decayed base-noise update.
///   descent:    n_j <- beta * n_j - (1 - beta) * g_j
///   as_written: n_j <- beta * n_j + (1 - beta) * g_j
enum class UpdateSign { descent, as_written };

struct NoiseSpaceOptions {
  double alpha = 1.0;    // diversity tradeoff
  double beta = 0.9;     // decay rate, in [0, 1]
  double epsilon = 1e-8; // norm guard
  UpdateSign update_sign = UpdateSign::descent;

  friend bool operator==(const NoiseSpaceOptions&, const NoiseSpaceOptions&) = default;
};

/// The k base noises n_1..n_k (each of dimension d) that span the learned
/// noise space, plus the hyperparameters of their self-supervised update.
class NoiseSpace {
 public:
  /// `bases` is k*d values, base-major. Throws on k or d zero, non-finite
  /// values, or beta outside [0, 1].
  NoiseSpace(std::size_t k, std::size_t d, std::vector<double> bases, NoiseSpaceOptions options = {});

  std::size_t k() const { return k_; }
  std::size_t d() const { return d_; }
  const NoiseSpaceOptions& options() const { return options_; }
  double alpha() const { return options_.alpha; }
  double beta() const { return options_.beta; }
  double epsilon() const { return options_.epsilon; }

  std::span<const double> bases() const { return bases_; }
  std::span<const double> base(std::size_t j) const { return {bases_.data() + j * d_, d_}; }

  NoiseSpace with_bases(std::vector<double> bases) const { return {k_, d_, std::move(bases), options_}; }

  friend bool operator==(const NoiseSpace&, const NoiseSpace&) = default;

 private:
  std::size_t k_;
  std::size_t d_;
  std::vector<double> bases_;
  NoiseSpaceOptions options_;
};

struct Similarities {
  std::vector<double> values;
  bool degenerate = false;
};

struct NoiseWeights {
  std::vector<double> values;
  bool degenerate = false;
};

/// L_u = L_r + L_s + alpha * L_d for one sample.
struct LossBreakdown {
  double reconstruction = 0.0;  // ||n_f - sum lambda_i n_i||^2
  double sparsity = 0.0;        // sum |lambda_i|
  double diversity = 0.0;       // mean pairwise inner product of the bases
  double total = 0.0;
};

struct NoiseEstimate {
  std::vector<double> extracted;           // n_f
  std::vector<double> similarities;        // s
  std::vector<double> pre_reconstruction;  // n'
  std::vector<double> weights;             // lambda
  std::vector<double> reconstructed;       // n_res
  bool degenerate = false;
  LossBreakdown losses;
};

/// Bases drawn i.i.d. uniform in [-1/sqrt(d), 1/sqrt(d)].
NoiseSpace init_noise_space(std::size_t k, std::size_t d, std::uint64_t seed, NoiseSpaceOptions options = {});

/// n_f = W * features + b, with W stored row-major as [d_out x d_in].
std::vector<double> extract_noise(std::span<const double> features, std::span<const double> weight,
                                  std::span<const double> bias);

/// s_j = <n_j, n_f> / (||n_j|| ||n_f||). All zeros and degenerate when
/// ||n_f|| < epsilon. A base with norm below epsilon gets s_j = 0.
Similarities cosine_similarities(const NoiseSpace& space, std::span<const double> extracted);

/// n' = sum_j s_j n_j
std::vector<double> pre_reconstruct(const NoiseSpace& space, std::span<const double> similarities);

/// lambda_j = (||n_f|| / ||n'||) s_j. All zeros and degenerate when ||n'|| < epsilon.
NoiseWeights estimate_weights(std::span<const double> extracted, std::span<const double> pre_reconstruction,
                              std::span<const double> similarities, double epsilon = 1e-8);

/// n_res = sum_j lambda_j n_j
std::vector<double> reconstruct_noise(const NoiseSpace& space, std::span<const double> weights);

/// (1 / (k(k-1))) * sum over ordered pairs l != m of <n_l, n_m>. Requires k >= 2.
double diversity_loss(const NoiseSpace& space);

/// ||n_f - sum_i lambda_i n_i||^2
double reconstruction_loss(std::span<const double> extracted, std::span<const double> weights,
                           const NoiseSpace& space);

double sparsity_loss(std::span<const double> weights);

/// Per-sample loss terms. The diversity term is 0 when k == 1.
LossBreakdown loss_breakdown(const NoiseSpace& space, std::span<const double> extracted,
                             std::span<const double> weights);

/// -2 lambda_i (n_f - sum_j lambda_j n_j) for each base, lambda held fixed.
/// k*d values, base-major.
std::vector<double> reconstruction_gradient(const NoiseSpace& space, std::span<const double> extracted,
                                            std::span<const double> weights);

/// (2 / (k(k-1))) * sum_{l != i} n_l for each base. Requires k >= 2.
std::vector<double> diversity_gradient(const NoiseSpace& space);

/// Gradient of ||n_f - sum lambda_j n_j||^2 + alpha * L_d with respect to each
/// base, lambda held fixed. Requires k >= 2.
std::vector<double> noise_space_gradient(const NoiseSpace& space, std::span<const double> extracted,
                                         std::span<const double> weights);

/// Decayed update of every base from gradients computed on the current
/// space (k*d values, base-major). Sign follows options().update_sign.
NoiseSpace self_supervised_update(const NoiseSpace& space, std::span<const double> gradients);

/// extract -> similarities -> pre-reconstruct -> weights -> reconstruct.
NoiseEstimate estimate(const NoiseSpace& space, std::span<const double> features,
                       std::span<const double> weight, std::span<const double> bias);

/// Reconstructs the noise for a tape-tracked n_f. The result is
/// differentiable with respect to n_f only; the bases enter as constants.
/// Returns a constant zero vector in the degenerate case, which is also
/// reported through `degenerate` when given.
Tensor reconstruct_tracked(const NoiseSpace& space, const Tensor& extracted, bool* degenerate = nullptr);

/// k and d as u32, then k*d f64 values, all little-endian.
void write_bases(std::ostream& os, const NoiseSpace& space);
NoiseSpace read_bases(std::istream& is, NoiseSpaceOptions options = {});

}  // namespace hsinoise
