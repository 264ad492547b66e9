#include "hsinoise/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <exception>
#include <ostream>
#include <string>
#include <vector>

#include "hsinoise/checkpoint.hpp"
#include "hsinoise/gradient_suite.hpp"
#include "hsinoise/render.hpp"
#include "hsinoise/scene.hpp"
#include "hsinoise/training.hpp"

namespace hsinoise {
namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_metrics(std::ostream& out, const MetricsReport& m) {
  out << "OA " << fixed(m.overall_accuracy) << "  AA " << fixed(m.average_accuracy) << "  Kappa "
      << fixed(m.kappa) << "\n";
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    out << "  class " << c + 1 << ": " << (m.per_class[c] ? fixed(*m.per_class[c]) : std::string("n/a")) << "\n";
  }
  out << "confusion (rows = truth):\n";
  for (std::size_t t = 0; t < m.confusion.classes(); ++t) {
    out << " ";
    for (std::size_t p = 0; p < m.confusion.classes(); ++p) out << " " << m.confusion.at(t, p);
    out << "\n";
  }
}

struct GenArgs {
  SceneParams scene;
  std::string out;
};

struct EvalArgs {
  std::string cube;
  std::string checkpoint;
  std::size_t per_class = 200;
  std::uint64_t seed = 1;
  std::string pixels = "test";
};

struct MapArgs {
  std::string cube;
  std::string checkpoint;
  std::string out = "map.ppm";
  bool truth = false;
};

void add_config(CLI::App* sub) {
  sub->add_option("--config", "File of `key = value` lines; command-line flags override it");
}

// CLI11 only reads config files for the top-level app, so the file given to a
// subcommand is expanded into `--key=value` tokens placed right after the
// subcommand name. Options keep their last value, so explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  if (!std::filesystem::is_regular_file(path)) throw CLI::FileError::Missing(path);

  std::vector<std::string> tokens;
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    std::string key = item.name;
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value;
    for (const auto& in : item.inputs) value += (value.empty() ? "" : ",") + in;
    tokens.push_back("--" + key + "=" + value);
  }
  const auto sub = std::find_if(args.begin() + 1, args.end(), [](const std::string& a) { return !a.starts_with("-"); });
  if (sub == args.end()) return args;
  args.insert(sub + 1, tokens.begin(), tokens.end());
  return args;
}

void add_gen(CLI::App& app, GenArgs& a) {
  auto* sub = app.add_subcommand("gen", "Generate a synthetic hyperspectral scene");
  add_config(sub);
  sub->add_option("-o,--out", a.out, "Output cube path")->required();
  sub->add_option("--classes", a.scene.num_classes, "Number of classes")->capture_default_str()->check(CLI::Range(1, 16));
  sub->add_option("--bands", a.scene.bands, "Spectral bands")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--rows", a.scene.rows, "Image rows")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--cols", a.scene.cols, "Image columns")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--true-bases", a.scene.true_bases, "Generator-side noise bases")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--noise-amplitude", a.scene.noise_amplitude, "Scale of the per-pixel noise weights")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--sigma", a.scene.white_noise_sigma, "White sensor noise std")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--region-size", a.scene.region_size, "Side of square class blocks")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", a.scene.seed, "Generator seed")->capture_default_str();
}

void add_run_options(CLI::App* sub, RunConfig& c, std::string& sign) {
  sub->add_option("--num-bases,-k", c.num_bases, "Noise bases k")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--feature-dim,-d", c.feature_dim, "Feature dimension d")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--neighbor-size,-w", c.neighbor_size, "Odd patch side w")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--lr", c.lr, "Learning rate")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--batch", c.batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--alpha", c.alpha, "Diversity weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--beta", c.beta, "Noise-space momentum")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sub->add_option("--lambda-c", c.lambda_c, "Center loss weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub->add_option("--gamma", c.gamma, "Center update rate")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sub->add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--per-class", c.per_class, "Training pixels per class")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--eval-subset", c.eval_subset, "Held-out pixels scored each epoch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "Run seed")->capture_default_str();
  sub->add_option("--update-sign", sign, "Noise-space step direction")
      ->capture_default_str()
      ->check(CLI::IsMember({"descent", "as-written"}));
  sub->add_flag("--baseline", c.baseline, "Disable the noise module");
}

int gen(const GenArgs& a, std::ostream& out) {
  const HSICube cube = generate_scene(make_scene_spec(a.scene));
  save_cube(cube, a.out);
  out << "wrote " << a.out << " (" << cube.bands << " bands, " << cube.rows << "x" << cube.cols << ", "
      << cube.num_classes << " classes)\n";
  return 0;
}

int train(RunConfig c, const std::string& sign, bool quiet, std::ostream& out) {
  c.update_sign = parse_update_sign(sign);
  auto progress = [&](const EpochLog& r) {
    if (quiet) return;
    out << "epoch " << r.epoch << "  ce " << fixed(r.cross_entropy) << "  center " << fixed(r.center) << "  recon "
        << fixed(r.reconstruction) << "  oa " << fixed(r.overall_accuracy) << "\n"
        << std::flush;
  };
  const TrainingResult result = run_training(c, progress);
  out << "test set (" << result.split.test.size() << " pixels): ";
  print_metrics(out, result.test_metrics);
  out << "checkpoint " << c.resolved_checkpoint().string() << "\n";
  return 0;
}

int eval(const EvalArgs& a, std::ostream& out) {
  const HSICube cube = load_cube(a.cube);
  const ModelState state = load_checkpoint(a.checkpoint);
  std::vector<PixelCoord> coords;
  if (a.pixels == "all") {
    for (std::size_t r = 0; r < cube.rows; ++r)
      for (std::size_t c = 0; c < cube.cols; ++c)
        if (cube.label(r, c) != 0) coords.push_back({r, c, cube.label(r, c)});
  } else {
    TrainTestSplit split = split_train_test(cube, a.per_class, a.seed);
    coords = a.pixels == "train" ? std::move(split.train) : std::move(split.test);
  }
  out << a.pixels << " pixels (" << coords.size() << "): ";
  print_metrics(out, evaluate(state, cube, coords));
  return 0;
}

int map(const MapArgs& a, std::ostream& out) {
  const HSICube cube = load_cube(a.cube);
  if (a.truth) {
    render_map(cube, cube.labels, default_palette(), a.out);
  } else {
    if (a.checkpoint.empty()) throw CLI::RequiredError("--checkpoint (or --truth)");
    render_map(cube, predict_map(load_checkpoint(a.checkpoint), cube), default_palette(), a.out);
  }
  out << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise-space denoising for hyperspectral image classification", "hsinoise"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenArgs gen_args;
  add_gen(app, gen_args);

  RunConfig run;
  std::string sign = "descent";
  std::string cube_path, checkpoint_path, output_dir = ".";
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a cube");
  add_config(train_cmd);
  train_cmd->add_option("--cube", cube_path, "Input cube")->required();
  train_cmd->add_option("--output-dir", output_dir, "Directory for log, split, map and checkpoint")
      ->capture_default_str();
  train_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path (default <output-dir>/model.hdnm)");
  train_cmd->add_flag("-q,--quiet", quiet, "Only print the final metrics");
  add_run_options(train_cmd, run, sign);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a cube");
  add_config(eval_cmd);
  eval_cmd->add_option("--cube", eval_args.cube, "Input cube")->required();
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Trained checkpoint")->required();
  eval_cmd->add_option("--per-class", eval_args.per_class, "Training pixels per class used by the split")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "Seed used by the split")->capture_default_str();
  eval_cmd->add_option("--pixels", eval_args.pixels, "Which pixels to score")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "test", "all"}));

  MapArgs map_args;
  auto* map_cmd = app.add_subcommand("map", "Render a classification map as PPM");
  add_config(map_cmd);
  map_cmd->add_option("--cube", map_args.cube, "Input cube")->required();
  map_cmd->add_option("--checkpoint", map_args.checkpoint, "Trained checkpoint");
  map_cmd->add_option("-o,--out", map_args.out, "Output image")->capture_default_str();
  map_cmd->add_flag("--truth", map_args.truth, "Render the ground-truth labels instead");

  std::uint64_t grad_seed = 2024;
  auto* grad_cmd = app.add_subcommand("check-grad", "Run the finite-difference gradient suites");
  grad_cmd->add_option("--seed", grad_seed, "Seed for the random instances")->capture_default_str();

  try {
    const std::vector<std::string> args = expand_config({argv, argv + argc});
    std::vector<const char*> expanded;
    for (const auto& a : args) expanded.push_back(a.c_str());
    app.parse(static_cast<int>(expanded.size()), expanded.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  run.cube_path = cube_path;
  run.checkpoint_path = checkpoint_path;
  run.output_dir = output_dir;
  try {
    if (*train_cmd) run.validate();
    if (*app.get_subcommand("gen")) make_scene_spec(gen_args.scene).validate();
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*app.get_subcommand("gen")) return gen(gen_args, out);
    if (*train_cmd) return train(run, sign, quiet, out);
    if (*eval_cmd) return eval(eval_args, out);
    if (*map_cmd) return map(map_args, out);
    const auto results = check_gradients(grad_seed);
    print_suite_report(out, results);
    for (const auto& r : results)
      if (!r.passed) return 2;
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace hsinoise
