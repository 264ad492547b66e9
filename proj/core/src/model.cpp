#include "hsinoise/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "hsinoise/ops.hpp"

namespace hsinoise {
namespace {

struct ConvGeometry {
  std::array<std::size_t, 3> conv1;
  std::array<std::size_t, 3> conv2;
  std::array<std::size_t, 3> out1;
  std::array<std::size_t, 3> out2;
  std::size_t flat = 0;
};

ConvGeometry geometry(const ModelConfig& c) {
  ConvGeometry g;
  const std::array<std::size_t, 3> in{c.bands, c.neighbor_size, c.neighbor_size};
  for (int a = 0; a < 3; ++a) {
    g.conv1[a] = std::min(c.conv1_extent[a], in[a]);
    g.out1[a] = in[a] - g.conv1[a] + 1;
    g.conv2[a] = std::min(c.conv2_extent[a], g.out1[a]);
    g.out2[a] = g.out1[a] - g.conv2[a] + 1;
  }
  g.flat = c.conv2_kernels * g.out2[0] * g.out2[1] * g.out2[2];
  return g;
}

constexpr double kExtractorInitScale = 0.1;

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v));
}

bool finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

bool same_bits(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

struct BatchForward {
  std::vector<ForwardPass> passes;
  Tensor center;
  Tensor loss;
  double mean_ce = 0.0;
};

BatchForward run_batch(const ModelState& state, const NetworkParams& params, const TrainBatch& batch) {
  if (batch.patches.empty() || batch.patches.size() != batch.labels.size()) {
    throw std::invalid_argument("batch needs matching, non-empty patches and labels");
  }
  BatchForward out;
  std::vector<Tensor> logits, clean;
  for (const Tensor& patch : batch.patches) {
    out.passes.push_back(forward(state, params, patch));
    logits.push_back(out.passes.back().logits);
    clean.push_back(out.passes.back().clean);
  }
  for (std::size_t b = 0; b < logits.size(); ++b) {
    out.mean_ce += softmax_cross_entropy(logits[b].detach(), batch.labels[b]).item();
  }
  out.mean_ce /= static_cast<double>(logits.size());
  out.center = center_loss(clean, batch.labels, state.centers);
  out.loss = total_loss(logits, batch.labels, out.center, state.config.lambda_c);
  return out;
}

// Fills the L_r / L_s / L_d entries of `report` and, when asked, returns the
// batch-mean noise-space gradient with lambda held fixed.
std::vector<double> noise_terms(const NoiseSpace& space, const std::vector<ForwardPass>& passes, StepReport& report,
                                bool want_grad) {
  const std::size_t n = space.k() * space.d();
  std::vector<double> grad(want_grad ? n : 0, 0.0);
  const double inv_b = 1.0 / static_cast<double>(passes.size());
  for (const auto& pass : passes) {
    const auto nf = pass.extracted.to_vector();
    const auto sim = cosine_similarities(space, nf);
    const auto pre = pre_reconstruct(space, sim.values);
    const auto w = estimate_weights(nf, pre, sim.values, space.epsilon());
    if (sim.degenerate || w.degenerate) ++report.degenerate;
    report.reconstruction += reconstruction_loss(nf, w.values, space) * inv_b;
    report.sparsity += sparsity_loss(w.values) * inv_b;
    if (want_grad) {
      const auto g = reconstruction_gradient(space, nf, w.values);
      for (std::size_t i = 0; i < n; ++i) grad[i] += g[i] * inv_b;
    }
  }
  if (space.k() >= 2) {
    report.diversity = diversity_loss(space);
    if (want_grad) {
      const auto div = diversity_gradient(space);
      for (std::size_t i = 0; i < n; ++i) grad[i] += space.alpha() * div[i];
    }
  }
  return grad;
}

}  // namespace

void ModelConfig::validate() const {
  if (bands == 0 || num_classes == 0 || feature_dim == 0 || num_bases == 0) {
    throw std::invalid_argument("model extents must be positive");
  }
  if (neighbor_size == 0 || neighbor_size % 2 == 0) throw std::invalid_argument("neighbor size must be odd");
  if (conv1_kernels == 0 || conv2_kernels == 0) throw std::invalid_argument("conv layers need kernels");
  for (auto e : conv1_extent)
    if (e == 0) throw std::invalid_argument("conv extents must be positive");
  for (auto e : conv2_extent)
    if (e == 0) throw std::invalid_argument("conv extents must be positive");
  if (!(lambda_c >= 0.0)) throw std::invalid_argument("lambda_c must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  if (!(noise.beta >= 0.0 && noise.beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!(noise.alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
}

std::array<Tensor*, 10> NetworkParams::entries() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b, &extractor_w, &extractor_b, &head_w, &head_b};
}

std::array<const Tensor*, 10> NetworkParams::entries() const {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b, &extractor_w, &extractor_b, &head_w, &head_b};
}

NetworkParams NetworkParams::track(Tape& tape) const {
  NetworkParams out;
  auto dst = out.entries();
  auto src = entries();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = tape.variable(src[i]->detach());
  return out;
}

ModelState init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const auto g = geometry(config);
  const std::size_t d = config.feature_dim, C = config.num_classes;
  const std::size_t K1 = config.conv1_kernels, K2 = config.conv2_kernels;

  std::mt19937_64 rng(seed);
  NetworkParams p;
  // He-uniform for layers followed by relu, 1/sqrt(fan_in) for the linear maps.
  const double fan1 = static_cast<double>(g.conv1[0] * g.conv1[1] * g.conv1[2]);
  const double fan2 = static_cast<double>(K1 * g.conv2[0] * g.conv2[1] * g.conv2[2]);
  p.conv1_w = uniform_tensor({K1, 1, g.conv1[0], g.conv1[1], g.conv1[2]}, std::sqrt(6.0 / fan1), rng);
  p.conv1_b = Tensor::zeros({K1});
  p.conv2_w = uniform_tensor({K2, K1, g.conv2[0], g.conv2[1], g.conv2[2]}, std::sqrt(6.0 / fan2), rng);
  p.conv2_b = Tensor::zeros({K2});
  p.fc_w = uniform_tensor({d, g.flat}, std::sqrt(6.0 / static_cast<double>(g.flat)), rng);
  p.fc_b = Tensor::zeros({d});
  p.head_w = uniform_tensor({d, C}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  p.head_b = Tensor::zeros({C});
  // Small extractor so the untrained noise path is a mild correction to phi.
  p.extractor_w = uniform_tensor({d, d}, kExtractorInitScale / std::sqrt(static_cast<double>(d)), rng);
  p.extractor_b = Tensor::zeros({d});

  const std::uint64_t space_seed = rng();
  NoiseSpace space = init_noise_space(config.num_bases, d, space_seed, config.noise);
  CenterBank centers{C, d, std::vector<double>(C * d, 0.0), config.gamma};
  return ModelState{config, std::move(p), std::move(space), std::move(centers)};
}

bool all_finite(const ModelState& state) {
  for (const Tensor* t : state.params.entries())
    if (!finite(*t)) return false;
  auto ok = [](double v) { return std::isfinite(v); };
  return std::all_of(state.noise_space.bases().begin(), state.noise_space.bases().end(), ok) &&
         std::all_of(state.centers.centers.begin(), state.centers.centers.end(), ok);
}

bool bitwise_equal(const ModelState& a, const ModelState& b) {
  if (!(a.config == b.config)) return false;
  auto ea = a.params.entries();
  auto eb = b.params.entries();
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (ea[i]->shape() != eb[i]->shape() || !same_bits(ea[i]->values(), eb[i]->values())) return false;
  }
  return a.noise_space.k() == b.noise_space.k() && a.noise_space.d() == b.noise_space.d() &&
         a.noise_space.options() == b.noise_space.options() &&
         same_bits(a.noise_space.bases(), b.noise_space.bases()) &&
         a.centers.num_classes == b.centers.num_classes && a.centers.dim == b.centers.dim &&
         a.centers.gamma == b.centers.gamma && same_bits(a.centers.centers, b.centers.centers);
}

Tensor backbone_forward(const Tensor& patch, const NetworkParams& params, const ModelConfig& config) {
  const std::size_t w = config.neighbor_size;
  if (patch.shape() != Shape{config.bands, w, w}) {
    throw std::invalid_argument("patch shape " + shape_string(patch.shape()) + " does not match configured " +
                                shape_string({config.bands, w, w}));
  }
  const std::size_t d = config.feature_dim;
  Tensor x = reshape(patch, {1, config.bands, w, w});
  x = relu(add_channel_bias(conv3d(x, params.conv1_w), params.conv1_b));
  x = relu(add_channel_bias(conv3d(x, params.conv2_w), params.conv2_b));
  x = reshape(x, {x.size(), 1});
  return relu(add(reshape(matmul(params.fc_w, x), {d}), params.fc_b));
}

Tensor denoise(const Tensor& features, const Tensor& reconstructed) { return sub(features, reconstructed); }

ForwardPass forward(const ModelState& state, const NetworkParams& params, const Tensor& patch) {
  const auto& cfg = state.config;
  const std::size_t d = cfg.feature_dim;
  ForwardPass out;
  out.features = backbone_forward(patch, params, cfg);
  if (cfg.baseline) {
    out.extracted = out.features;
    out.reconstructed = Tensor::zeros({d});
    out.clean = out.features;
  } else {
    out.extracted =
        add(reshape(matmul(params.extractor_w, reshape(out.features, {d, 1})), {d}), params.extractor_b);
    out.reconstructed = reconstruct_tracked(state.noise_space, out.extracted, &out.degenerate);
    out.clean = denoise(out.features, out.reconstructed);
  }
  out.logits = add(reshape(matmul(reshape(out.clean, {1, d}), params.head_w), {cfg.num_classes}), params.head_b);
  return out;
}

Tensor center_loss(std::span<const Tensor> clean, std::span<const std::size_t> labels, const CenterBank& centers) {
  if (clean.size() != labels.size() || clean.empty()) {
    throw std::invalid_argument("center_loss: need matching, non-empty features and labels");
  }
  Tensor acc;
  for (std::size_t b = 0; b < clean.size(); ++b) {
    if (labels[b] >= centers.num_classes) {
      throw std::invalid_argument("center_loss: label " + std::to_string(labels[b]) + " out of range");
    }
    const auto c = centers.center(labels[b]);
    const Tensor diff = sub(clean[b], Tensor::from({centers.dim}, {c.begin(), c.end()}));
    const Tensor sq = dot(diff, diff);
    acc = b == 0 ? sq : add(acc, sq);
  }
  return scale(acc, 0.5);
}

CenterBank update_centers(const CenterBank& centers, std::span<const std::vector<double>> clean,
                          std::span<const std::size_t> labels) {
  if (clean.empty() || clean.size() != labels.size()) {
    throw std::invalid_argument("update_centers: need matching, non-empty features and labels");
  }
  const std::size_t d = centers.dim;
  std::vector<double> delta(centers.centers.size(), 0.0);
  std::vector<std::size_t> count(centers.num_classes, 0);
  for (std::size_t b = 0; b < clean.size(); ++b) {
    const std::size_t m = labels[b];
    if (m >= centers.num_classes) throw std::invalid_argument("update_centers: label out of range");
    ++count[m];
    for (std::size_t t = 0; t < d; ++t) delta[m * d + t] += centers.centers[m * d + t] - clean[b][t];
  }
  CenterBank out = centers;
  for (std::size_t m = 0; m < centers.num_classes; ++m) {
    if (count[m] == 0) continue;
    const double n = static_cast<double>(count[m]);
    for (std::size_t t = 0; t < d; ++t) out.centers[m * d + t] -= centers.gamma * (delta[m * d + t] / n);
  }
  return out;
}

Tensor total_loss(std::span<const Tensor> logits, std::span<const std::size_t> labels, const Tensor& center,
                  double lambda_c) {
  if (logits.empty() || logits.size() != labels.size()) {
    throw std::invalid_argument("total_loss: need matching, non-empty logits and labels");
  }
  if (!(lambda_c >= 0.0)) throw std::invalid_argument("total_loss: lambda_c must be >= 0");
  Tensor ce;
  for (std::size_t b = 0; b < logits.size(); ++b) {
    const Tensor term = softmax_cross_entropy(logits[b], labels[b]);
    ce = b == 0 ? term : add(ce, term);
  }
  ce = scale(ce, 1.0 / static_cast<double>(logits.size()));
  return add(ce, scale(center, lambda_c));
}

Tensor batch_loss(const ModelState& state, const NetworkParams& params, const TrainBatch& batch) {
  return run_batch(state, params, batch).loss;
}

std::pair<ModelState, StepReport> train_step(const ModelState& state, const TrainBatch& batch, double lr) {
  const auto& cfg = state.config;
  Tape tape;
  const NetworkParams tracked = state.params.track(tape);
  const BatchForward fwd = run_batch(state, tracked, batch);

  StepReport report;
  report.total = fwd.loss.item();
  report.center = fwd.center.item();
  report.cross_entropy = fwd.mean_ce;
  if (!std::isfinite(report.total)) {
    std::ostringstream msg;
    msg << "non-finite loss (total=" << report.total << ", center=" << report.center << ") in a batch of "
        << batch.patches.size();
    throw NonFiniteLossError(msg.str());
  }

  const Gradients grads = tape.backward(fwd.loss);
  ModelState next = state;
  auto dst = next.params.entries();
  auto src = tracked.entries();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const Tensor g = grads.of(*src[i]);
    if (!finite(g)) {
      throw NonFiniteLossError(std::string("non-finite gradient for ") + NetworkParams::kNames[i]);
    }
    if (lr == 0.0) continue;
    const auto p = dst[i]->values();
    std::vector<double> updated(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) updated[j] = p[j] - lr * g[j];
    *dst[i] = Tensor::from(dst[i]->shape(), std::move(updated));
  }

  std::vector<std::vector<double>> clean;
  clean.reserve(fwd.passes.size());
  for (const auto& pass : fwd.passes) clean.push_back(pass.clean.to_vector());
  next.centers = update_centers(state.centers, clean, batch.labels);

  if (!cfg.baseline) {
    const auto grad = noise_terms(state.noise_space, fwd.passes, report, true);
    next.noise_space = self_supervised_update(state.noise_space, grad);
  }

  if (!all_finite(next)) throw NonFiniteLossError("parameters became non-finite after the update");
  return {std::move(next), report};
}

StepReport evaluate_batch(const ModelState& state, const TrainBatch& batch) {
  const BatchForward fwd = run_batch(state, state.params, batch);
  StepReport report;
  report.total = fwd.loss.item();
  report.center = fwd.center.item();
  report.cross_entropy = fwd.mean_ce;
  if (!state.config.baseline) noise_terms(state.noise_space, fwd.passes, report, false);
  return report;
}

std::size_t predict(const ModelState& state, const Tensor& patch) {
  const ForwardPass pass = forward(state, state.params, patch);
  const auto z = pass.logits.values();
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

}  // namespace hsinoise
