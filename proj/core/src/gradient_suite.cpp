#include "hsinoise/gradient_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "hsinoise/gradcheck.hpp"
#include "hsinoise/model.hpp"
#include "hsinoise/ops.hpp"
#include "hsinoise/tape.hpp"

namespace hsinoise {
namespace {

constexpr double kStep = 1e-5;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  std::size_t extent(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  // Magnitudes in [0.1, 1] keep samples away from relu kinks and zero divisors.
  Tensor tensor(Shape shape) {
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> v(shape_size(shape));
    for (double& x : v) x = sign(rng_) ? mag(rng_) : -mag(rng_);
    return Tensor::from(std::move(shape), std::move(v));
  }

  std::vector<double> vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng_);
    return v;
  }

  Shape shape() {
    Shape s(extent(1, 3));
    for (auto& e : s) e = extent(1, 6);
    return s;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

using Builder = std::function<Tensor(const std::vector<Tensor>&)>;

// Projects the output onto fixed random weights so every output element
// contributes, then compares tape and finite-difference gradients for each
// input.
double graph_error(const Builder& build, const std::vector<Tensor>& inputs, Sampler& sampler) {
  Tape tape;
  std::vector<Tensor> vars;
  for (const Tensor& in : inputs) vars.push_back(tape.variable(in));
  const Tensor out = build(vars);
  const Tensor weights = sampler.tensor(out.shape());
  const Gradients grads = tape.backward(dot(out, weights));

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Tensor& xi) {
      std::vector<Tensor> probe = inputs;
      probe[i] = xi;
      return dot(build(probe), weights).item();
    };
    worst = std::max(worst, gradient_relative_error(grads.of(vars[i]), finite_diff_grad(f, inputs[i], kStep)));
  }
  return worst;
}

SuiteResult finish(std::string name, std::size_t cases, double worst, double threshold) {
  return {std::move(name), cases, worst, threshold, worst <= threshold};
}

NoiseSpace random_space(Sampler& s, std::size_t k, std::size_t d, double alpha) {
  NoiseSpaceOptions opts;
  opts.alpha = alpha;
  return NoiseSpace(k, d, s.vector(k * d), opts);
}

double min_abs(const Tensor& t) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : t.values()) m = std::min(m, std::abs(v));
  return m;
}

}  // namespace

SuiteResult check_primitive_gradients(std::uint64_t seed, std::size_t trials) {
  Sampler s(seed);
  double worst = 0.0;
  constexpr std::size_t kOps = 16;
  for (std::size_t t = 0; t < trials; ++t) {
    Builder build;
    std::vector<Tensor> inputs;
    switch (t % kOps) {
      case 0: {
        const std::size_t m = s.extent(1, 6), n = s.extent(1, 6), p = s.extent(1, 6);
        inputs = {s.tensor({m, n}), s.tensor({n, p})};
        build = [](const auto& x) { return matmul(x[0], x[1]); };
        break;
      }
      case 1: {
        const std::size_t C = s.extent(1, 3), D = s.extent(1, 6), H = s.extent(1, 6), W = s.extent(1, 6);
        const std::size_t K = s.extent(1, 3);
        const std::size_t stride = s.extent(1, 2);
        inputs = {s.tensor({C, D, H, W}), s.tensor({K, C, s.extent(1, D), s.extent(1, H), s.extent(1, W)})};
        build = [stride](const auto& x) { return conv3d(x[0], x[1], stride); };
        break;
      }
      case 2:
      case 3:
      case 4: {
        const Shape shape = s.shape();
        inputs = {s.tensor(shape), s.tensor(shape)};
        const std::size_t op = t % kOps;
        build = [op](const auto& x) { return op == 2 ? add(x[0], x[1]) : op == 3 ? sub(x[0], x[1]) : mul(x[0], x[1]); };
        break;
      }
      case 5: {
        inputs = {s.tensor(s.shape())};
        const double f = s.vector(1, -2.0, 2.0)[0];
        build = [f](const auto& x) { return scale(x[0], f); };
        break;
      }
      case 6:
        inputs = {s.tensor(s.shape()), s.tensor({1})};
        build = [](const auto& x) { return scale(x[0], x[1]); };
        break;
      case 7:
        inputs = {s.tensor(s.shape()), s.tensor({1})};
        build = [](const auto& x) { return divide(x[0], x[1]); };
        break;
      case 8:
        inputs = {s.tensor(s.shape())};
        build = [](const auto& x) { return relu(x[0]); };
        break;
      case 9: {
        Shape shape = s.shape();
        inputs = {s.tensor(shape), s.tensor({shape[0]})};
        build = [](const auto& x) { return add_channel_bias(x[0], x[1]); };
        break;
      }
      case 10:
        inputs = {s.tensor(s.shape())};
        build = [](const auto& x) { return reshape(x[0], {x[0].size()}); };
        break;
      case 11:
        inputs = {s.tensor(s.shape())};
        build = [](const auto& x) { return sum(x[0]); };
        break;
      case 12:
        inputs = {s.tensor(s.shape())};
        build = [](const auto& x) { return mean(x[0]); };
        break;
      case 13: {
        const std::size_t n = s.extent(1, 6);
        inputs = {s.tensor({n}), s.tensor({n})};
        build = [](const auto& x) { return dot(x[0], x[1]); };
        break;
      }
      case 14:
        inputs = {s.tensor(s.shape())};
        build = [](const auto& x) { return l2_norm(x[0]); };
        break;
      default: {
        const std::size_t n = s.extent(2, 6);
        const std::size_t label = s.extent(0, n - 1);
        inputs = {s.tensor({n})};
        build = [label](const auto& x) { return softmax_cross_entropy(x[0], label); };
        break;
      }
    }
    worst = std::max(worst, graph_error(build, inputs, s));
  }
  return finish("autodiff primitives", trials, worst, 1e-4);
}

SuiteResult check_composed_gradient(std::uint64_t seed, std::size_t trials) {
  Sampler s(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t label = s.extent(0, 2);
    std::vector<Tensor> inputs;
    // Keep pre-activations clear of the relu kink so the differences stay smooth.
    do {
      inputs = {s.tensor({1, 4, 4, 4}), s.tensor({2, 1, 2, 2, 2}), s.tensor({2}), s.tensor({3, 54})};
    } while (min_abs(add_channel_bias(conv3d(inputs[0], inputs[1]), inputs[2])) < 1e-3);
    Builder build = [label](const std::vector<Tensor>& x) {
      Tensor h = relu(add_channel_bias(conv3d(x[0], x[1]), x[2]));
      // Scaled so the softmax stays unsaturated and every input keeps a usable gradient.
      Tensor logits = scale(reshape(matmul(x[3], reshape(h, {54, 1})), {3}), 0.1);
      return add(softmax_cross_entropy(logits, label), scale(l2_norm(h), 0.1));
    };
    worst = std::max(worst, graph_error(build, inputs, s));
  }
  return finish("composed graph", trials, worst, 1e-4);
}

SuiteResult check_noise_space_gradient(std::uint64_t seed, std::size_t instances, const NoiseGradientFn& gradient) {
  Sampler s(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t k = s.extent(2, 8), d = s.extent(1, 16);
    const double alpha = s.vector(1, 0.0, 2.0)[0];
    const NoiseSpace space = random_space(s, k, d, alpha);
    const auto nf = s.vector(d);
    const auto lambda = s.vector(k);

    const Tensor analytic = Tensor::from({k, d}, gradient(space, nf, lambda));
    // Objective as an independent function of the raw base values.
    auto objective = [&](const Tensor& bases) {
      const auto b = bases.values();
      double rec = 0.0;
      for (std::size_t t2 = 0; t2 < d; ++t2) {
        double r = nf[t2];
        for (std::size_t j = 0; j < k; ++j) r -= lambda[j] * b[j * d + t2];
        rec += r * r;
      }
      double div = 0.0;
      for (std::size_t l = 0; l < k; ++l)
        for (std::size_t m = 0; m < k; ++m) {
          if (l == m) continue;
          for (std::size_t t2 = 0; t2 < d; ++t2) div += b[l * d + t2] * b[m * d + t2];
        }
      div /= static_cast<double>(k * (k - 1));
      return rec + alpha * div;
    };
    const Tensor numeric = finite_diff_grad(objective, Tensor::from({k, d}, {space.bases().begin(), space.bases().end()}), kStep);
    worst = std::max(worst, gradient_relative_error(analytic, numeric));
  }
  return finish("noise-space gradient (fixed lambda)", instances, worst, 1e-4);
}

SuiteResult check_diversity_gradient(std::uint64_t seed, std::size_t instances, const DiversityGradientFn& gradient) {
  Sampler s(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < instances; ++t) {
    const std::size_t k = s.extent(2, 8), d = s.extent(1, 16);
    const NoiseSpace space = random_space(s, k, d, 1.0);
    // d/dn_i of c * sum_{l != m} <n_l, n_m>, one ordered pair at a time.
    const double c = 1.0 / static_cast<double>(k * (k - 1));
    std::vector<double> brute(k * d, 0.0);
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t m = 0; m < k; ++m) {
        if (l == m) continue;
        for (std::size_t t2 = 0; t2 < d; ++t2) {
          brute[l * d + t2] += c * space.base(m)[t2];
          brute[m * d + t2] += c * space.base(l)[t2];
        }
      }
    worst = std::max(worst, gradient_relative_error(Tensor::from({k, d}, gradient(space)),
                                                    Tensor::from({k, d}, std::move(brute))));
  }
  return finish("diversity gradient (ordered pairs)", instances, worst, 1e-12);
}

SuiteResult check_center_loss_gradient(std::uint64_t seed, std::size_t trials) {
  Sampler s(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t d = s.extent(1, 8), C = s.extent(1, 4), B = s.extent(1, 4);
    CenterBank bank{C, d, s.vector(C * d), 0.5};
    std::vector<std::size_t> labels(B);
    for (auto& l : labels) l = s.extent(0, C - 1);
    std::vector<Tensor> inputs;
    for (std::size_t b = 0; b < B; ++b) inputs.push_back(s.tensor({d}));
    Builder build = [&](const std::vector<Tensor>& x) { return center_loss(x, labels, bank); };
    worst = std::max(worst, graph_error(build, inputs, s));
  }
  return finish("center loss", trials, worst, 1e-5);
}

SuiteResult check_model_gradient(std::uint64_t seed) {
  Sampler s(seed);
  ModelConfig cfg;
  cfg.bands = 4;
  cfg.neighbor_size = 3;
  cfg.num_classes = 2;
  cfg.feature_dim = 8;
  cfg.num_bases = 4;
  ModelState state = init_model(cfg, seed);
  state.centers.centers = s.vector(state.centers.centers.size());
  // Non-zero biases so every relu sees both signs of pre-activation shift.
  for (Tensor* p : {&state.params.conv1_b, &state.params.conv2_b, &state.params.fc_b, &state.params.extractor_b}) {
    *p = Tensor::from(p->shape(), s.vector(p->size(), -0.1, 0.1));
  }

  TrainBatch batch;
  for (std::size_t b = 0; b < 4; ++b) {
    batch.patches.push_back(Tensor::from({4, 3, 3}, s.vector(36)));
    batch.labels.push_back(b % 2);
  }

  Tape tape;
  const NetworkParams tracked = state.params.track(tape);
  const Gradients grads = tape.backward(batch_loss(state, tracked, batch));

  double worst = 0.0;
  std::size_t cases = 0;
  const auto entries = state.params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto f = [&](const Tensor& value) {
      NetworkParams probe = state.params;
      *probe.entries()[i] = value;
      return batch_loss(state, probe, batch).item();
    };
    const Tensor numeric = finite_diff_grad(f, *entries[i], kStep);
    worst = std::max(worst, gradient_relative_error(grads.of(*tracked.entries()[i]), numeric));
    cases += entries[i]->size();
  }
  return finish("tiny model end-to-end", cases, worst, 1e-3);
}

std::vector<SuiteResult> check_gradients(std::uint64_t seed) {
  return {check_primitive_gradients(seed),       check_composed_gradient(seed + 1),
          check_noise_space_gradient(seed + 2),  check_diversity_gradient(seed + 3),
          check_center_loss_gradient(seed + 4),  check_model_gradient(seed + 5)};
}

void print_suite_report(std::ostream& os, const std::vector<SuiteResult>& results) {
  char buf[256];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%-4s %-38s cases=%-6zu max_rel_err=%.3e threshold=%.0e\n",
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), r.cases, r.max_rel_error, r.threshold);
    os << buf;
  }
}

}  // namespace hsinoise
