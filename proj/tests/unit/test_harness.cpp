#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hsinoise/checkpoint.hpp"
#include "hsinoise/metrics.hpp"
#include "hsinoise/render.hpp"
#include "hsinoise/run_config.hpp"
#include "hsinoise/scene.hpp"
#include "hsinoise/training.hpp"

namespace hsinoise {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hsinoise_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ConfusionMatrix matrix(std::vector<std::uint64_t> counts) { return ConfusionMatrix::from_counts(counts); }

TEST(MetricsTest, HandComputedTwoClassCase) {
  // p_o = 17/20, p_e = (10*9 + 10*11) / 400 = 0.5
  const MetricsReport m = compute_metrics(matrix({8, 2, 1, 9}));
  EXPECT_NEAR(m.overall_accuracy, 0.85, 1e-12);
  EXPECT_NEAR(m.average_accuracy, 0.85, 1e-12);
  EXPECT_NEAR(m.kappa, 0.70, 1e-12);
  EXPECT_NEAR(*m.per_class[0], 0.8, 1e-15);
  EXPECT_NEAR(*m.per_class[1], 0.9, 1e-15);
}

TEST(MetricsTest, PerfectAndChanceClassifiers) {
  const MetricsReport perfect = compute_metrics(matrix({5, 0, 0, 0, 7, 0, 0, 0, 2}));
  EXPECT_EQ(perfect.overall_accuracy, 1.0);
  EXPECT_EQ(perfect.average_accuracy, 1.0);
  EXPECT_EQ(perfect.kappa, 1.0);
  const MetricsReport uniform = compute_metrics(matrix({4, 4, 4, 4, 4, 4, 4, 4, 4}));
  EXPECT_NEAR(uniform.kappa, 0.0, 1e-15);
}

TEST(MetricsTest, AbsentClassIsLeftOutOfAverageAccuracy) {
  const MetricsReport m = compute_metrics(matrix({3, 1, 0, 0, 0, 0, 0, 0, 0}));
  EXPECT_FALSE(m.per_class[1].has_value());
  EXPECT_FALSE(m.per_class[2].has_value());
  EXPECT_NEAR(m.average_accuracy, 0.75, 1e-15);
}

TEST(MetricsTest, KappaReportedAsOneWhenChanceAgreementIsCertain) {
  EXPECT_EQ(compute_metrics(matrix({6, 0, 0, 0})).kappa, 1.0);
}

TEST(MetricsTest, RejectsMalformedInput) {
  EXPECT_THROW(matrix({1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(matrix({}), std::invalid_argument);
  EXPECT_THROW(compute_metrics(ConfusionMatrix(3)), std::invalid_argument);
  ConfusionMatrix c(2);
  EXPECT_THROW(c.add(2, 0), std::out_of_range);
}

TEST(MetricsTest, MatchesBruteForceTallyOnRandomInstances) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t C = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200)(rng);
    std::uniform_int_distribution<std::size_t> cls(0, C - 1);
    std::vector<std::size_t> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = cls(rng), pred[i] = cls(rng);

    const MetricsReport m = compute_metrics(tally(truth, pred, C));
    ASSERT_EQ(m.confusion.total(), n);

    double hits = 0, pe = 0, aa = 0;
    std::size_t present = 0;
    for (std::size_t a = 0; a < C; ++a) {
      std::size_t row = 0, col = 0, diag = 0;
      for (std::size_t i = 0; i < n; ++i) {
        row += truth[i] == a;
        col += pred[i] == a;
        diag += truth[i] == a && pred[i] == a;
      }
      for (std::size_t b = 0; b < C; ++b) {
        std::size_t cell = 0;
        for (std::size_t i = 0; i < n; ++i) cell += truth[i] == a && pred[i] == b;
        ASSERT_EQ(m.confusion.at(a, b), cell);
      }
      hits += static_cast<double>(diag);
      pe += static_cast<double>(row) * static_cast<double>(col);
      if (row > 0) aa += static_cast<double>(diag) / static_cast<double>(row), ++present;
    }
    const double N = static_cast<double>(n);
    const double po = hits / N;
    pe /= N * N;
    ASSERT_NEAR(m.overall_accuracy, po, 1e-12);
    ASSERT_NEAR(m.average_accuracy, aa / static_cast<double>(present), 1e-12);
    ASSERT_NEAR(m.kappa, pe == 1.0 ? 1.0 : (po - pe) / (1.0 - pe), 1e-12);
    ASSERT_GE(m.kappa, -1.0);
    ASSERT_LE(m.kappa, 1.0);
  }
}

TEST(MetricsTest, InvariantUnderConsistentClassPermutation) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 100; ++t) {
    const std::size_t C = 5;
    std::uniform_int_distribution<std::size_t> cls(0, C - 1);
    std::vector<std::size_t> truth(60), pred(60), perm(C);
    for (std::size_t i = 0; i < 60; ++i) truth[i] = cls(rng), pred[i] = cls(rng);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> pt(60), pp(60);
    for (std::size_t i = 0; i < 60; ++i) pt[i] = perm[truth[i]], pp[i] = perm[pred[i]];
    const MetricsReport a = compute_metrics(tally(truth, pred, C)), b = compute_metrics(tally(pt, pp, C));
    EXPECT_NEAR(a.overall_accuracy, b.overall_accuracy, 1e-12);
    EXPECT_NEAR(a.average_accuracy, b.average_accuracy, 1e-12);
    EXPECT_NEAR(a.kappa, b.kappa, 1e-12);
  }
}

TEST(RunConfigTest, ValidatesRanges) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.beta = 1.5;
  try {
    c.validate();
    FAIL() << "expected a range error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
  }
  c = RunConfig{};
  c.neighbor_size = 4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.num_bases = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.gamma = -0.1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RunConfigTest, DefaultsAndSignParsing) {
  const RunConfig c;
  EXPECT_EQ(c.num_bases, 64u);
  EXPECT_EQ(c.feature_dim, 64u);
  EXPECT_EQ(c.neighbor_size, 5u);
  EXPECT_EQ(c.lr, 1e-4);
  EXPECT_EQ(c.batch, 4u);
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.beta, 0.9);
  EXPECT_EQ(c.per_class, 200u);
  EXPECT_EQ(c.resolved_checkpoint(), fs::path(".") / "model.hdnm");
  EXPECT_EQ(parse_update_sign("descent"), UpdateSign::descent);
  EXPECT_EQ(parse_update_sign("as-written"), UpdateSign::as_written);
  EXPECT_EQ(to_string(UpdateSign::as_written), "as-written");
  EXPECT_THROW(parse_update_sign("up"), std::invalid_argument);
}

TEST(RenderTest, TwoByTwoMapBytes) {
  std::stringstream ss;
  const std::vector<std::uint16_t> labels{1, 1, 2, 0};
  const auto pal = default_palette();
  write_ppm(ss, 2, 2, labels, pal);
  const std::string bytes = ss.str();
  const std::string header = "P6\n2 2\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 12);
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  std::set<std::array<std::uint8_t, 3>> colours;
  for (std::size_t i = 0; i < 4; ++i) {
    Rgb px;
    for (std::size_t ch = 0; ch < 3; ++ch) px[ch] = static_cast<std::uint8_t>(bytes[header.size() + 3 * i + ch]);
    EXPECT_EQ(px, pal[labels[i]]);
    colours.insert(px);
  }
  EXPECT_EQ(colours.size(), 3u);
  EXPECT_EQ(pal[0], (Rgb{0, 0, 0}));
}

TEST(RenderTest, UnlabeledCubeIsBlackAndRenderingIsDeterministic) {
  HSICube cube{1, 3, 4, 2, std::vector<double>(12, 0.0), std::vector<std::uint16_t>(12, 0)};
  const fs::path dir = scratch_dir("render");
  render_map(cube, cube.labels, default_palette(), dir / "a.ppm");
  const std::string a = slurp(dir / "a.ppm");
  EXPECT_EQ(a, "P6\n4 3\n255\n" + std::string(36, '\0'));

  const HSICube scene = generate_scene(make_scene_spec(SceneParams{}));
  render_map(scene, scene.labels, default_palette(), dir / "b.ppm");
  render_map(scene, scene.labels, default_palette(), dir / "c.ppm");
  EXPECT_EQ(slurp(dir / "b.ppm"), slurp(dir / "c.ppm"));
  fs::remove_all(dir);
}

TEST(RenderTest, RejectsShortPalette) {
  const std::vector<Rgb> pal{Rgb{0, 0, 0}, Rgb{1, 1, 1}};
  std::stringstream ss;
  EXPECT_THROW(write_ppm(ss, 1, 2, std::vector<std::uint16_t>{1, 2}, pal), std::invalid_argument);
}

TEST(RenderTest, PredictedMapKeepsUnlabeledPixelsBlack) {
  SceneParams p;
  p.rows = p.cols = 16;
  p.bands = 8;
  HSICube cube = generate_scene(make_scene_spec(p));
  cube.labels[5] = 0;
  RunConfig rc;
  rc.feature_dim = rc.num_bases = 8;
  const auto map = predict_map(initial_state(rc, cube), cube);
  ASSERT_EQ(map.size(), 256u);
  EXPECT_EQ(map[5], 0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (i != 5) { EXPECT_TRUE(map[i] >= 1 && map[i] <= 4); }
  }
}

// A 4x5 cube whose two classes differ in sign, so a model can memorise it.
HSICube toy_cube() {
  HSICube cube;
  cube.bands = 4;
  cube.rows = 4;
  cube.cols = 5;
  cube.num_classes = 2;
  cube.labels.resize(20);
  cube.radiance.resize(80);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 0.2);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      const std::uint16_t label = (r + c) % 2 ? 2 : 1;
      cube.labels[r * 5 + c] = label;
      for (std::size_t b = 0; b < 4; ++b) cube.radiance[(b * 4 + r) * 5 + c] = (label == 1 ? 1.0 : -1.0) + g(rng);
    }
  return cube;
}

TEST(EvaluateTest, FittedToyModelScoresPerfectlyOnItsPixels) {
  const HSICube cube = toy_cube();
  RunConfig rc;
  rc.neighbor_size = 1;
  rc.feature_dim = rc.num_bases = 8;
  ModelState s = initial_state(rc, cube);
  std::vector<PixelCoord> coords;
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 5; ++c) coords.push_back({r, c, cube.label(r, c)});
  const PatchSet set = make_patch_set(cube, coords, 1);
  TrainBatch all{set.patches, set.labels};
  for (int step = 0; step < 300; ++step) s = train_step(s, all, 0.05).first;
  EXPECT_EQ(evaluate(s, cube, coords).overall_accuracy, 1.0);
}

TEST(EvaluateTest, UntrainedModelIsNearChance) {
  SceneParams p;
  p.rows = p.cols = 32;
  p.bands = 16;
  const HSICube cube = generate_scene(make_scene_spec(p));
  std::vector<PixelCoord> coords;
  for (std::size_t r = 0; r < 32; r += 2)
    for (std::size_t c = 0; c < 32; c += 2) coords.push_back({r, c, cube.label(r, c)});
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig rc;
    rc.seed = seed;
    rc.feature_dim = rc.num_bases = 16;
    total += evaluate(initial_state(rc, cube), cube, coords).overall_accuracy;
  }
  EXPECT_NEAR(total / 5.0, 0.25, 0.1);
}

TEST(EvaluateTest, RejectsEmptyAndMismatchedInput) {
  const HSICube cube = toy_cube();
  RunConfig rc;
  rc.neighbor_size = 1;
  rc.feature_dim = rc.num_bases = 8;
  const ModelState s = initial_state(rc, cube);
  EXPECT_THROW(evaluate(s, cube, {}), std::invalid_argument);
  HSICube other = cube;
  other.bands = 2;
  other.radiance.resize(40);
  EXPECT_THROW(evaluate(s, other, {{0, 0, 1}}), std::invalid_argument);
}

class RunTrainingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = scratch_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    SceneParams p;
    p.rows = p.cols = 32;
    p.bands = 16;
    p.noise_amplitude = 1.0;
    save_cube(generate_scene(make_scene_spec(p)), dir_ / "scene.hsic");
    config_.cube_path = dir_ / "scene.hsic";
    config_.feature_dim = config_.num_bases = 16;
    config_.per_class = 40;
    config_.eval_subset = 100;
    config_.lr = 1e-3;
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  RunConfig config_;
};

TEST_F(RunTrainingTest, ZeroEpochsSavesTheInitialisation) {
  config_.epochs = 0;
  config_.output_dir = dir_ / "out";
  const TrainingResult r = run_training(config_);
  EXPECT_EQ(r.log.size(), 1u);
  const HSICube cube = load_cube(config_.cube_path);
  EXPECT_TRUE(bitwise_equal(load_checkpoint(config_.resolved_checkpoint()), initial_state(config_, cube)));
  for (const char* f : {"train_log.csv", "split.csv", "prediction_map.ppm", "model.hdnm"})
    EXPECT_TRUE(fs::exists(config_.output_dir / f)) << f;
}

TEST_F(RunTrainingTest, RepeatedRunsWriteIdenticalFiles) {
  config_.epochs = 2;
  config_.output_dir = dir_ / "a";
  run_training(config_);
  config_.output_dir = dir_ / "b";
  run_training(config_);
  for (const char* f : {"train_log.csv", "split.csv", "prediction_map.ppm", "model.hdnm"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(RunTrainingTest, LogSchemaAndLearningProgress) {
  config_.epochs = 30;
  config_.output_dir = dir_ / "out";
  std::size_t callbacks = 0;
  const TrainingResult r = run_training(config_, [&](const EpochLog&) { ++callbacks; });
  EXPECT_EQ(callbacks, 31u);
  EXPECT_GT(r.log.back().overall_accuracy, r.log.front().overall_accuracy);
  EXPECT_TRUE(all_finite(r.state));

  std::ifstream is(config_.output_dir / "train_log.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "epoch,ce,center,recon,sparsity,diversity,oa");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
    ++rows;
  }
  EXPECT_EQ(rows, 31u);
}

TEST_F(RunTrainingTest, InsufficientClassSamplesFail) {
  config_.per_class = 500;
  EXPECT_THROW(run_training(config_), std::invalid_argument);
}

}  // namespace
}  // namespace hsinoise
