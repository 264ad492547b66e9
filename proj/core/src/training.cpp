#include "hsinoise/training.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "hsinoise/checkpoint.hpp"
#include "hsinoise/render.hpp"

namespace hsinoise {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  std::mt19937_64 rng(seq);
  return rng();
}

enum SeedTag : std::uint32_t { kModelInit = 1, kShuffle = 2, kEvalSubset = 3 };

void check_compatible(const ModelState& state, const HSICube& cube) {
  if (state.config.bands != cube.bands || state.config.num_classes != cube.num_classes) {
    throw std::invalid_argument("model expects " + std::to_string(state.config.bands) + " bands / " +
                                std::to_string(state.config.num_classes) + " classes, cube has " +
                                std::to_string(cube.bands) + " / " + std::to_string(cube.num_classes));
  }
}

double subset_accuracy(const ModelState& state, const PatchSet& set) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.patches.size(); ++i) hits += predict(state, set.patches[i]) == set.labels[i];
  return static_cast<double>(hits) / static_cast<double>(set.patches.size());
}

TrainBatch gather(const PatchSet& set, std::span<const std::size_t> order) {
  TrainBatch batch;
  for (std::size_t i : order) {
    batch.patches.push_back(set.patches[i]);
    batch.labels.push_back(set.labels[i]);
  }
  return batch;
}

}  // namespace

MetricsReport evaluate(const ModelState& state, const HSICube& cube, const std::vector<PixelCoord>& coords) {
  if (coords.empty()) throw std::invalid_argument("evaluate: no pixels to score");
  check_compatible(state, cube);
  ConfusionMatrix confusion(cube.num_classes);
  for (const auto& c : coords) {
    const Tensor patch = extract_patch(cube, c.row, c.col, state.config.neighbor_size);
    confusion.add(cube.label(c.row, c.col) - 1u, predict(state, patch));
  }
  return compute_metrics(confusion);
}

ModelState initial_state(const RunConfig& config, const HSICube& cube) {
  return init_model(config.model_config(cube), derive_seed(config.seed, kModelInit));
}

TrainingResult train_model(const RunConfig& config, const HSICube& cube, const EpochCallback& on_epoch) {
  config.validate();
  cube.validate();
  TrainingResult result{initial_state(config, cube), {}, {}, {}};
  result.split = split_train_test(cube, config.per_class, config.seed);

  const PatchSet train = make_patch_set(cube, result.split.train, config.neighbor_size);
  std::vector<PixelCoord> held_out = result.split.test;
  {
    std::mt19937_64 rng(derive_seed(config.seed, kEvalSubset));
    std::shuffle(held_out.begin(), held_out.end(), rng);
    held_out.resize(std::min(held_out.size(), config.eval_subset));
  }
  const PatchSet eval = make_patch_set(cube, held_out, config.neighbor_size);

  auto record = [&](EpochLog row) {
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
  };

  const std::size_t n = train.patches.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  {
    EpochLog row;
    for (std::size_t start = 0; start < n; start += config.batch) {
      const std::size_t len = std::min(config.batch, n - start);
      const StepReport r = evaluate_batch(result.state, gather(train, std::span(order).subspan(start, len)));
      const double w = static_cast<double>(len) / static_cast<double>(n);
      row.cross_entropy += r.cross_entropy * w;
      row.center += r.center * w;
      row.reconstruction += r.reconstruction * w;
      row.sparsity += r.sparsity * w;
      row.diversity = r.diversity;
    }
    row.overall_accuracy = subset_accuracy(result.state, eval);
    record(row);
  }

  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffle));
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog row;
    row.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += config.batch) {
      const std::size_t len = std::min(config.batch, n - start);
      auto [next, r] = train_step(result.state, gather(train, std::span(order).subspan(start, len)), config.lr);
      result.state = std::move(next);
      row.cross_entropy += r.cross_entropy;
      row.center += r.center;
      row.reconstruction += r.reconstruction;
      row.sparsity += r.sparsity;
      row.diversity += r.diversity;
      ++steps;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    row.cross_entropy *= inv;
    row.center *= inv;
    row.reconstruction *= inv;
    row.sparsity *= inv;
    row.diversity *= inv;
    row.overall_accuracy = subset_accuracy(result.state, eval);
    record(row);
  }

  result.test_metrics = evaluate(result.state, cube, result.split.test);
  return result;
}

TrainingResult run_training(const RunConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const HSICube cube = load_cube(config.cube_path);
  TrainingResult result = train_model(config, cube, on_epoch);

  std::filesystem::create_directories(config.output_dir);
  {
    std::ofstream os(config.output_dir / "train_log.csv", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write training log in " + config.output_dir.string());
    write_log_csv(os, result.log);
  }
  {
    std::ofstream os(config.output_dir / "split.csv", std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write split in " + config.output_dir.string());
    write_split_csv(os, result.split);
  }
  save_checkpoint(result.state, config.resolved_checkpoint());
  render_map(cube, predict_map(result.state, cube), default_palette(), config.output_dir / "prediction_map.ppm");
  return result;
}

void write_log_csv(std::ostream& os, const std::vector<EpochLog>& log) {
  os << "epoch,ce,center,recon,sparsity,diversity,oa\n";
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.6f\n", r.epoch, r.cross_entropy, r.center,
                  r.reconstruction, r.sparsity, r.diversity, r.overall_accuracy);
    os << buf;
  }
}

}  // namespace hsinoise
