#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hsinoise/checkpoint.hpp"
#include "hsinoise/cli.hpp"
#include "hsinoise/cube.hpp"

namespace hsinoise {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "hsinoise");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hsinoise_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, CheckGradPasses) {
  const CliResult r = run({"check-grad", "--seed", "5"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitWithOne) {
  const CliResult beta = run({"train", "--cube", path("none.hsic"), "--beta", "1.5"});
  EXPECT_EQ(beta.code, 1);
  EXPECT_NE(beta.err.find("--beta"), std::string::npos) << beta.err;
  EXPECT_EQ(run({"train", "--cube", path("none.hsic"), "--bogus"}).code, 1);
  EXPECT_EQ(run({"train", "--cube", path("none.hsic"), "--neighbor-size", "4"}).code, 1);
  EXPECT_EQ(run({"train", "--cube", path("none.hsic"), "--update-sign", "up"}).code, 1);
  EXPECT_EQ(run({"eval", "--cube", path("none.hsic")}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"gen", "-o", path("x.hsic"), "--config", path("missing.ini")}).code, 1);
}

TEST_F(CliTest, MissingInputIsARuntimeFailure) {
  EXPECT_EQ(run({"train", "--cube", path("none.hsic"), "--output-dir", path("out")}).code, 2);
}

TEST_F(CliTest, GenIsDeterministicAndWritesAValidCube) {
  ASSERT_EQ(run({"gen", "-o", path("a.hsic"), "--rows", "16", "--cols", "16", "--seed", "7"}).code, 0);
  ASSERT_EQ(run({"gen", "-o", path("b.hsic"), "--rows", "16", "--cols", "16", "--seed", "7"}).code, 0);
  EXPECT_EQ(slurp(path("a.hsic")), slurp(path("b.hsic")));
  const HSICube cube = load_cube(path("a.hsic"));
  EXPECT_EQ(cube.rows, 16u);
  EXPECT_EQ(cube.bands, 32u);
}

TEST_F(CliTest, ConfigFileIsAppliedAndFlagsOverrideIt) {
  {
    std::ofstream cfg(path("run.ini"));
    cfg << "rows = 12\ncols = 20\nbands = 6\nseed = 3\n";
  }
  ASSERT_EQ(run({"gen", "--config", path("run.ini"), "-o", path("c.hsic"), "--bands", "9"}).code, 0);
  const HSICube cube = load_cube(path("c.hsic"));
  EXPECT_EQ(cube.rows, 12u);
  EXPECT_EQ(cube.cols, 20u);
  EXPECT_EQ(cube.bands, 9u);
}

TEST_F(CliTest, TrainEvalAndMapWorkEndToEnd) {
  ASSERT_EQ(run({"gen", "-o", path("s.hsic"), "--rows", "32", "--cols", "32", "--bands", "8", "--noise-amplitude",
                 "0.5"})
                .code,
            0);
  const CliResult train = run({"train", "--cube", path("s.hsic"), "--output-dir", path("out"), "--epochs", "2",
                               "--per-class", "20", "-k", "8", "-d", "8", "--eval-subset", "40", "--quiet"});
  ASSERT_EQ(train.code, 0) << train.err;
  EXPECT_NE(train.out.find("OA "), std::string::npos);
  for (const char* f : {"train_log.csv", "split.csv", "prediction_map.ppm", "model.hdnm"})
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;

  const CliResult eval = run({"eval", "--cube", path("s.hsic"), "--checkpoint", path("out/model.hdnm"),
                              "--per-class", "20", "--pixels", "all"});
  ASSERT_EQ(eval.code, 0) << eval.err;
  EXPECT_NE(eval.out.find("Kappa"), std::string::npos);
  EXPECT_NE(eval.out.find("confusion"), std::string::npos);

  ASSERT_EQ(run({"map", "--cube", path("s.hsic"), "--checkpoint", path("out/model.hdnm"), "-o", path("m.ppm")}).code,
            0);
  EXPECT_EQ(slurp(path("m.ppm")), slurp(path("out/prediction_map.ppm")));
  ASSERT_EQ(run({"map", "--cube", path("s.hsic"), "--truth", "-o", path("t.ppm")}).code, 0);
  EXPECT_EQ(slurp(path("t.ppm")).substr(0, 13), "P6\n32 32\n255\n");
  EXPECT_EQ(run({"map", "--cube", path("s.hsic")}).code, 1);
}

}  // namespace
}  // namespace hsinoise
