#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hsinoise/model.hpp"
#include "hsinoise/noise_space.hpp"
#include "hsinoise/ops.hpp"
#include "hsinoise/tape.hpp"

namespace {

using namespace hsinoise;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// First backbone layer on a 32-band 5x5 patch.
void BM_Conv3dForward(benchmark::State& state) {
  const Tensor input = Tensor::from({1, 32, 5, 5}, random_values(800, 1));
  const Tensor kernels = Tensor::from({8, 1, 7, 3, 3}, random_values(504, 2));
  for (auto _ : state) benchmark::DoNotOptimize(conv3d(input, kernels));
}
BENCHMARK(BM_Conv3dForward);

void BM_Conv3dBackward(benchmark::State& state) {
  const Tensor input = Tensor::from({1, 32, 5, 5}, random_values(800, 1));
  const Tensor kernels = Tensor::from({8, 1, 7, 3, 3}, random_values(504, 2));
  for (auto _ : state) {
    Tape tape;
    const Tensor k = tape.variable(kernels);
    const Tensor x = tape.variable(input);
    benchmark::DoNotOptimize(tape.backward(sum(conv3d(x, k))));
  }
}
BENCHMARK(BM_Conv3dBackward);

void BM_NoiseEstimate(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const NoiseSpace space = init_noise_space(k, d, 3);
  const auto phi = random_values(d, 4);
  auto w = random_values(d * d, 5);
  const auto b = random_values(d, 6);
  for (auto _ : state) benchmark::DoNotOptimize(estimate(space, phi, w, b));
}
BENCHMARK(BM_NoiseEstimate)->Args({64, 64})->Args({1024, 400});

void BM_NoiseSpaceGradient(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const NoiseSpace space = init_noise_space(k, d, 7);
  const auto nf = random_values(d, 8);
  const auto lambda = random_values(k, 9);
  for (auto _ : state) benchmark::DoNotOptimize(noise_space_gradient(space, nf, lambda));
}
BENCHMARK(BM_NoiseSpaceGradient)->Args({64, 64})->Args({1024, 400});

void BM_TrainStep(benchmark::State& state) {
  ModelConfig config;
  config.baseline = state.range(0) != 0;
  const ModelState model = init_model(config, 10);
  TrainBatch batch;
  for (std::size_t i = 0; i < 4; ++i) {
    batch.patches.push_back(Tensor::from({32, 5, 5}, random_values(800, 11 + i)));
    batch.labels.push_back(i % config.num_classes);
  }
  for (auto _ : state) benchmark::DoNotOptimize(train_step(model, batch, 1e-3));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->ArgNames({"baseline"});

}  // namespace

BENCHMARK_MAIN();
