#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "hsinoise/cube.hpp"
#include "hsinoise/metrics.hpp"
#include "hsinoise/model.hpp"
#include "hsinoise/patches.hpp"
#include "hsinoise/run_config.hpp"

namespace hsinoise {

/// One row of the training log. Epoch 0 holds the untrained model.
struct EpochLog {
  std::size_t epoch = 0;
  double cross_entropy = 0.0;
  double center = 0.0;
  double reconstruction = 0.0;
  double sparsity = 0.0;
  double diversity = 0.0;
  double overall_accuracy = 0.0;  // on the fixed held-out subset
};

struct TrainingResult {
  ModelState state;
  std::vector<EpochLog> log;
  TrainTestSplit split;
  MetricsReport test_metrics;  // full test set, final model
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Predicts every listed pixel and scores it against the cube labels.
/// Throws on an empty list or when the model does not fit the cube.
MetricsReport evaluate(const ModelState& state, const HSICube& cube, const std::vector<PixelCoord>& coords);

/// The seeded model train_model starts from.
ModelState initial_state(const RunConfig& config, const HSICube& cube);

/// Splits, trains for config.epochs epochs of ceil(N / batch) steps with a
/// seeded shuffle each epoch, and scores the held-out subset after each
/// epoch. Nothing is written to disk.
TrainingResult train_model(const RunConfig& config, const HSICube& cube, const EpochCallback& on_epoch = {});

/// train_model on config.cube_path, then writes into config.output_dir:
/// train_log.csv, split.csv, prediction_map.ppm, and the checkpoint.
TrainingResult run_training(const RunConfig& config, const EpochCallback& on_epoch = {});

/// CSV header "epoch,ce,center,recon,sparsity,diversity,oa".
void write_log_csv(std::ostream& os, const std::vector<EpochLog>& log);

}  // namespace hsinoise
