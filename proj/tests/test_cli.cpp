#include "ktl/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ktl;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("ktl_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SynthFitEncodeEvalPipeline) {
  ASSERT_EQ(run({"synth", "--n", "6", "--N", "60", "--density", "0.3", "--seed", "4", "--out", path("x.csv")}).code,
            0);
  {
    std::ofstream labels(path("y.txt"));
    for (int i = 0; i < 60; ++i) labels << i % 3 << '\n';
  }
  for (const char* method : {"tl", "ktl", "ektl"}) {
    const std::string model = path(std::string(method) + ".ktlm");
    const CliRun fit = run({"fit", "--method", method, "--data", path("x.csv"), "--format", "csv", "--threshold", "0.3",
                         "--iters", "5", "--rank", "10", "--out", model});
    ASSERT_EQ(fit.code, 0) << fit.err;
    const auto record = nlohmann::json::parse(fit.out);
    EXPECT_EQ(record["record"], "fit");
    EXPECT_EQ(record["method"], method);
    EXPECT_EQ(record["N"], 60);

    const CliRun enc = run({"encode", "--model", model, "--data", path("x.csv"), "--format", "csv", "--labels",
                         path("y.txt"), "--out", path("f.csv"), "--labels-out", path("fy.txt")});
    ASSERT_EQ(enc.code, 0) << enc.err;
    EXPECT_EQ(nlohmann::json::parse(enc.out)["samples"], 60);

    const CliRun ev = run({"eval", "--train-feats", path("f.csv"), "--train-labels", path("fy.txt"), "--test-feats",
                        path("f.csv"), "--test-labels", path("fy.txt"), "--name", method, "--csv-out",
                        path("table.csv")});
    ASSERT_EQ(ev.code, 0) << ev.err;
    const auto first = nlohmann::json::parse(ev.out.substr(0, ev.out.find('\n')));
    EXPECT_EQ(first["metric"], "accuracy");
    const Matrix feats = load_csv_file(path("f.csv")).samples;
    const std::vector<int> y = cli::detail::read_labels(path("fy.txt"));
    EXPECT_EQ(first["value"].get<double>(), evaluate_knn(feats, y, feats, y).accuracy);
  }
  const std::string table = slurp(path("table.csv"));
  EXPECT_EQ(table.rfind("features,classifier,accuracy\n", 0), 0u);
  EXPECT_NE(table.find("\nektl,NN,"), std::string::npos);
}

TEST_F(CliTest, VerboseTraceAndReproducibleOutputs) {
  ASSERT_EQ(run({"synth", "--n", "5", "--N", "40", "--seed", "1", "--out", path("x.csv")}).code, 0);
  auto fit = [&](const std::string& tag) {
    return run({"fit", "--method", "ektl", "--data", path("x.csv"), "--format", "csv", "--iters", "4", "--rank", "8",
                "--out", path(tag + ".ktlm"), "--codes-out", path(tag + ".csv"), "--verbose"});
  };
  const CliRun a = fit("a"), b = fit("b");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(slurp(path("a.ktlm")), slurp(path("b.ktlm")));
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  std::istringstream lines(a.out);
  std::string line;
  int numeric = 0;
  while (std::getline(lines, line) && line.front() != '{') ++numeric;
  EXPECT_EQ(numeric, nlohmann::json::parse(line)["iterations"].get<int>() + 1);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"fit", "--data", "x"}).code, 2);  // missing --out
  const CliRun bad_method = run({"fit", "--method", "svm", "--data", "x", "--out", path("m")});
  EXPECT_EQ(bad_method.code, 2);
  EXPECT_NE(bad_method.err.find("--method"), std::string::npos);
  EXPECT_EQ(run({"fit", "--data", "x", "--out", "m", "--lambda", "-1"}).code, 2);
  EXPECT_EQ(run({"fit", "--data", "x", "--out", "m", "--preprocess", "whiten"}).code, 2);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
  EXPECT_EQ(run({"fit", "--data", path("missing.idx"), "--out", path("m")}).code, 1);
  ASSERT_EQ(run({"synth", "--n", "3", "--N", "30", "--out", path("x.csv")}).code, 0);
  const CliRun capped = run({"fit", "--method", "ktl", "--data", path("x.csv"), "--format", "csv", "--sample-cap", "20",
                          "--out", path("m")});
  EXPECT_EQ(capped.code, 1);
  EXPECT_NE(capped.err.find("--method ektl"), std::string::npos);
  EXPECT_EQ(run({"fit", "--method", "ektl", "--data", path("x.csv"), "--format", "csv", "--rank", "31", "--out",
                 path("m")})
                .code,
            1);
  std::ofstream(path("junk.ktlm")) << "junk";
  EXPECT_EQ(run({"encode", "--model", path("junk.ktlm"), "--data", path("x.csv"), "--format", "csv", "--out",
                 path("f.csv")})
                .code,
            1);
}

TEST_F(CliTest, BenchWritesOneRowPerMethod) {
  ASSERT_EQ(run({"synth", "--n", "4", "--N", "40", "--out", path("x.csv")}).code, 0);
  const CliRun b = run({"bench", "--methods", "tl,ektl", "--data", path("x.csv"), "--format", "csv", "--iters", "3",
                     "--rank", "5", "--csv-out", path("bench.csv")});
  ASSERT_EQ(b.code, 0) << b.err;
  std::istringstream rows(slurp(path("bench.csv")));
  std::string header, tl, ektl, extra;
  std::getline(rows, header);
  std::getline(rows, tl);
  std::getline(rows, ektl);
  EXPECT_EQ(header, "method,n_train,fit_seconds,encode_seconds_per_1k,iterations,config_digest");
  EXPECT_EQ(tl.rfind("tl,40,", 0), 0u);
  EXPECT_EQ(ektl.rfind("ektl,40,", 0), 0u);
  EXPECT_FALSE(std::getline(rows, extra));
}
