#include "hsinoise/noise_space.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "hsinoise/binary_io.hpp"
#include "hsinoise/ops.hpp"

namespace hsinoise {
namespace {

double dot_product(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot_product(a, a)); }

void require_length(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                                std::to_string(v.size()));
  }
}

void require_pairs(const NoiseSpace& space, const char* what) {
  if (space.k() < 2) {
    throw std::invalid_argument(std::string(what) + " needs at least two base noises");
  }
}

// Sum of all bases; sum_{l != i} n_l is then total - n_i.
std::vector<double> base_total(const NoiseSpace& space) {
  std::vector<double> total(space.d(), 0.0);
  for (std::size_t l = 0; l < space.k(); ++l) {
    const auto nl = space.base(l);
    for (std::size_t t = 0; t < space.d(); ++t) total[t] += nl[t];
  }
  return total;
}

}  // namespace

NoiseSpace::NoiseSpace(std::size_t k, std::size_t d, std::vector<double> bases, NoiseSpaceOptions options)
    : k_(k), d_(d), bases_(std::move(bases)), options_(options) {
  if (k_ == 0 || d_ == 0) throw std::invalid_argument("noise space needs k >= 1 and d >= 1");
  if (bases_.size() != k_ * d_) {
    throw std::invalid_argument("noise space expects " + std::to_string(k_ * d_) + " base values, got " +
                                std::to_string(bases_.size()));
  }
  if (!(options_.beta >= 0.0 && options_.beta <= 1.0)) {
    throw std::invalid_argument("decay rate beta must lie in [0, 1]");
  }
  if (!(options_.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  for (double v : bases_) {
    if (!std::isfinite(v)) throw std::invalid_argument("noise space bases must be finite");
  }
}

NoiseSpace init_noise_space(std::size_t k, std::size_t d, std::uint64_t seed, NoiseSpaceOptions options) {
  if (k == 0 || d == 0) throw std::invalid_argument("noise space needs k >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> bases(k * d);
  for (std::size_t j = 0; j < k; ++j) {
    // A base of all zeros has probability zero; redraw it anyway.
    double* row = bases.data() + j * d;
    do {
      for (std::size_t t = 0; t < d; ++t) row[t] = dist(rng);
    } while (norm({row, d}) == 0.0);
  }
  return NoiseSpace(k, d, std::move(bases), options);
}

std::vector<double> extract_noise(std::span<const double> features, std::span<const double> weight,
                                  std::span<const double> bias) {
  const std::size_t d_in = features.size();
  const std::size_t d_out = bias.size();
  if (d_in == 0 || weight.size() != d_out * d_in) {
    throw std::invalid_argument("extract_noise: weight has " + std::to_string(weight.size()) +
                                " entries, expected " + std::to_string(d_out) + "x" + std::to_string(d_in));
  }
  std::vector<double> out(bias.begin(), bias.end());
  for (std::size_t r = 0; r < d_out; ++r) out[r] += dot_product(weight.subspan(r * d_in, d_in), features);
  return out;
}

Similarities cosine_similarities(const NoiseSpace& space, std::span<const double> extracted) {
  require_length(extracted, space.d(), "cosine_similarities");
  Similarities out{std::vector<double>(space.k(), 0.0), false};
  const double nf = norm(extracted);
  if (nf < space.epsilon()) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t j = 0; j < space.k(); ++j) {
    const auto nj = space.base(j);
    const double bn = norm(nj);
    if (bn < space.epsilon()) continue;
    out.values[j] = std::clamp(dot_product(nj, extracted) / (bn * nf), -1.0, 1.0);
  }
  return out;
}

std::vector<double> pre_reconstruct(const NoiseSpace& space, std::span<const double> similarities) {
  return reconstruct_noise(space, similarities);
}

NoiseWeights estimate_weights(std::span<const double> extracted, std::span<const double> pre_reconstruction,
                              std::span<const double> similarities, double epsilon) {
  require_length(pre_reconstruction, extracted.size(), "estimate_weights");
  NoiseWeights out{std::vector<double>(similarities.size(), 0.0), false};
  const double np = norm(pre_reconstruction);
  if (np < epsilon) {
    out.degenerate = true;
    return out;
  }
  const double ratio = norm(extracted) / np;
  for (std::size_t j = 0; j < similarities.size(); ++j) out.values[j] = ratio * similarities[j];
  return out;
}

std::vector<double> reconstruct_noise(const NoiseSpace& space, std::span<const double> weights) {
  require_length(weights, space.k(), "reconstruct_noise");
  std::vector<double> out(space.d(), 0.0);
  for (std::size_t j = 0; j < space.k(); ++j) {
    const double w = weights[j];
    if (w == 0.0) continue;
    const auto nj = space.base(j);
    for (std::size_t t = 0; t < space.d(); ++t) out[t] += w * nj[t];
  }
  return out;
}

double diversity_loss(const NoiseSpace& space) {
  require_pairs(space, "diversity_loss");
  double acc = 0.0;
  for (std::size_t l = 0; l < space.k(); ++l)
    for (std::size_t m = 0; m < space.k(); ++m)
      if (l != m) acc += dot_product(space.base(l), space.base(m));
  const double k = static_cast<double>(space.k());
  return acc / (k * (k - 1.0));
}

double reconstruction_loss(std::span<const double> extracted, std::span<const double> weights,
                           const NoiseSpace& space) {
  require_length(extracted, space.d(), "reconstruction_loss");
  const auto rec = reconstruct_noise(space, weights);
  double acc = 0.0;
  for (std::size_t t = 0; t < rec.size(); ++t) {
    const double r = extracted[t] - rec[t];
    acc += r * r;
  }
  return acc;
}

double sparsity_loss(std::span<const double> weights) {
  double acc = 0.0;
  for (double w : weights) acc += std::abs(w);
  return acc;
}

LossBreakdown loss_breakdown(const NoiseSpace& space, std::span<const double> extracted,
                             std::span<const double> weights) {
  LossBreakdown out;
  out.reconstruction = reconstruction_loss(extracted, weights, space);
  out.sparsity = sparsity_loss(weights);
  out.diversity = space.k() >= 2 ? diversity_loss(space) : 0.0;
  out.total = out.reconstruction + out.sparsity + space.alpha() * out.diversity;
  return out;
}

std::vector<double> reconstruction_gradient(const NoiseSpace& space, std::span<const double> extracted,
                                            std::span<const double> weights) {
  require_length(extracted, space.d(), "reconstruction_gradient");
  const auto rec = reconstruct_noise(space, weights);
  std::vector<double> residual(space.d());
  for (std::size_t t = 0; t < space.d(); ++t) residual[t] = extracted[t] - rec[t];

  std::vector<double> grad(space.k() * space.d(), 0.0);
  for (std::size_t i = 0; i < space.k(); ++i) {
    const double c = -2.0 * weights[i];
    for (std::size_t t = 0; t < space.d(); ++t) grad[i * space.d() + t] = c * residual[t];
  }
  return grad;
}

std::vector<double> diversity_gradient(const NoiseSpace& space) {
  require_pairs(space, "diversity_gradient");
  const auto total = base_total(space);
  const double k = static_cast<double>(space.k());
  const double c = 2.0 / (k * (k - 1.0));
  std::vector<double> grad(space.k() * space.d());
  for (std::size_t i = 0; i < space.k(); ++i) {
    const auto ni = space.base(i);
    for (std::size_t t = 0; t < space.d(); ++t) grad[i * space.d() + t] = c * (total[t] - ni[t]);
  }
  return grad;
}

std::vector<double> noise_space_gradient(const NoiseSpace& space, std::span<const double> extracted,
                                         std::span<const double> weights) {
  require_pairs(space, "noise_space_gradient");
  auto grad = reconstruction_gradient(space, extracted, weights);
  const auto div = diversity_gradient(space);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += space.alpha() * div[i];
  return grad;
}

NoiseSpace self_supervised_update(const NoiseSpace& space, std::span<const double> gradients) {
  require_length(gradients, space.k() * space.d(), "self_supervised_update");
  const double beta = space.beta();
  const double step = space.options().update_sign == UpdateSign::descent ? -(1.0 - beta) : (1.0 - beta);
  const auto old = space.bases();
  std::vector<double> next(old.size());
  for (std::size_t i = 0; i < old.size(); ++i) next[i] = beta * old[i] + step * gradients[i];
  return space.with_bases(std::move(next));
}

NoiseEstimate estimate(const NoiseSpace& space, std::span<const double> features,
                       std::span<const double> weight, std::span<const double> bias) {
  NoiseEstimate est;
  est.extracted = extract_noise(features, weight, bias);
  require_length(est.extracted, space.d(), "estimate");

  auto sim = cosine_similarities(space, est.extracted);
  est.similarities = std::move(sim.values);
  est.pre_reconstruction = pre_reconstruct(space, est.similarities);
  auto w = estimate_weights(est.extracted, est.pre_reconstruction, est.similarities, space.epsilon());
  est.weights = std::move(w.values);
  est.degenerate = sim.degenerate || w.degenerate;
  est.reconstructed = est.degenerate ? std::vector<double>(space.d(), 0.0) : reconstruct_noise(space, est.weights);
  est.losses = loss_breakdown(space, est.extracted, est.weights);
  return est;
}

Tensor reconstruct_tracked(const NoiseSpace& space, const Tensor& extracted, bool* degenerate) {
  const std::size_t k = space.k(), d = space.d();
  if (extracted.size() != d) {
    throw std::invalid_argument("reconstruct_tracked: expected length " + std::to_string(d));
  }
  if (degenerate) *degenerate = true;
  const Tensor zero = Tensor::zeros({d});
  const Tensor nf_norm = l2_norm(extracted);
  if (nf_norm.item() < space.epsilon()) return zero;

  // Unit-normalised bases [k x d] and the transposed raw bases [d x k].
  std::vector<double> unit(k * d, 0.0), transposed(d * k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto nj = space.base(j);
    const double bn = norm(nj);
    for (std::size_t t = 0; t < d; ++t) {
      if (bn >= space.epsilon()) unit[j * d + t] = nj[t] / bn;
      transposed[t * k + j] = nj[t];
    }
  }
  const Tensor similarities =
      divide(matmul(Tensor::from({k, d}, std::move(unit)), reshape(extracted, {d, 1})), nf_norm);
  const Tensor pre = matmul(Tensor::from({d, k}, std::move(transposed)), similarities);
  const Tensor pre_norm = l2_norm(pre);
  if (pre_norm.item() < space.epsilon()) return zero;
  if (degenerate) *degenerate = false;
  return reshape(scale(pre, divide(nf_norm, pre_norm)), {d});
}

void write_bases(std::ostream& os, const NoiseSpace& space) {
  binary::write_u32(os, static_cast<std::uint32_t>(space.k()));
  binary::write_u32(os, static_cast<std::uint32_t>(space.d()));
  for (double v : space.bases()) binary::write_f64(os, v);
}

NoiseSpace read_bases(std::istream& is, NoiseSpaceOptions options) {
  const std::uint32_t k = binary::read_u32(is, "noise space k");
  const std::uint32_t d = binary::read_u32(is, "noise space d");
  if (k == 0 || d == 0) throw FormatError("noise space with zero extent");
  const std::uint64_t n = static_cast<std::uint64_t>(k) * d;
  if (n > (1ull << 32)) throw FormatError("noise space extents overflow");
  std::vector<double> bases(n);
  for (double& v : bases) v = binary::read_f64(is, "noise space bases");
  return NoiseSpace(k, d, std::move(bases), options);
}

}  // namespace hsinoise
