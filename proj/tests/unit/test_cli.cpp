#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "planted.hpp"
#include "landscape/matrix_io.hpp"
#include "landscape/model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace landscape;

namespace {

struct Invocation {
  int status = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("landscape_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Invocation run(const std::string& args, const std::string& env = "") {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = env + " " + LANDSCAPE_CLI_PATH + " " + args + " 2>" + err.string();
    Invocation r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return {-1, "", "popen failed"};
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int st = pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.err = slurp(err);
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

json strip_duration(json j) {
  j["manifest"].erase("duration_seconds");
  return j;
}

}  // namespace

TEST_F(Cli, GenWritesValidDataset) {
  const Invocation r = run("gen --dims 4,3,2,3,4 --samples 10 --seed 7 --out " + path("g"));
  ASSERT_EQ(r.status, 0) << r.err;
  const Dataset data = load_dataset(path("g"));
  EXPECT_EQ(data.X().rows(), 4u);
  EXPECT_EQ(data.samples(), 10u);
  const WeightStack w = load_weights(path("g") + "/weights");
  EXPECT_EQ(w.dims(), NetworkDims::parse("4,3,2,3,4"));
  const json manifest = json::parse(slurp(path("g") + "/manifest.json"));
  EXPECT_EQ(manifest["manifest"]["command"], "gen");
}

TEST_F(Cli, GenIsDeterministic) {
  ASSERT_EQ(run("gen --dims 3,2,3 --samples 6 --seed 3 --out " + path("a")).status, 0);
  ASSERT_EQ(run("gen --dims 3,2,3 --samples 6 --seed 3 --out " + path("b")).status, 0);
  EXPECT_EQ(slurp(path("a") + "/X.txt"), slurp(path("b") + "/X.txt"));
  EXPECT_EQ(slurp(path("a") + "/weights/layer_2.txt"), slurp(path("b") + "/weights/layer_2.txt"));
}

TEST_F(Cli, SeedEnvironmentOverride) {
  ASSERT_EQ(run("gen --dims 3,2,3 --samples 6 --seed 3 --out " + path("a")).status, 0);
  ASSERT_EQ(run("gen --dims 3,2,3 --samples 6 --seed 99 --out " + path("b"), "LANDSCAPE_SEED=3").status, 0);
  EXPECT_EQ(slurp(path("a") + "/Y.txt"), slurp(path("b") + "/Y.txt"));
  EXPECT_NE(run("gen --dims 3,2,3 --samples 6 --out " + path("c"), "LANDSCAPE_SEED=abc").status, 0);
}

TEST_F(Cli, GenRejectsSingleWidth) {
  const Invocation r = run("gen --dims 4 --samples 5 --out " + path("g"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("PreconditionError"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, TrainThenAnalyzeBottleneckOne) {
  ASSERT_EQ(run("gen --dims 3,1,3 --samples 6 --seed 2 --out " + path("g")).status, 0);
  const Invocation t = run("train --data " + path("g") + " --save " + path("w") + " --out " + path("train.json"));
  ASSERT_EQ(t.status, 0) << t.err;
  EXPECT_TRUE(fs::exists(path("w") + "/trajectory.csv"));
  const Invocation a = run("analyze --data " + path("g") + " --weights " + path("w") + " --out -");
  ASSERT_EQ(a.status, 0) << a.err;
  const json j = json::parse(a.out);
  EXPECT_EQ(j["result"]["classification"], "global-min");
  EXPECT_TRUE(j.contains("manifest"));
}

TEST_F(Cli, AnalyzeZeroWeightsIsSaddle) {
  save_dataset(dir_ / "d", Dataset(Matrix::identity(2), Matrix{{2, 0}, {0, 1}}));
  save_weights(dir_ / "d" / "weights", WeightStack::zeros(NetworkDims({2, 2, 2})));
  const Invocation a = run("analyze --data " + path("d"));
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(json::parse(a.out)["result"]["classification"], "saddle");
}

TEST_F(Cli, ReportsAreReproducibleExceptDuration) {
  save_dataset(dir_ / "d", Dataset(Matrix::identity(2), Matrix{{2, 0}, {0, 1}}));
  save_weights(dir_ / "d" / "weights", WeightStack::zeros(NetworkDims({2, 2, 2})));
  const Invocation a = run("analyze --data " + path("d"));
  const Invocation b = run("analyze --data " + path("d"));
  EXPECT_EQ(strip_duration(json::parse(a.out)), strip_duration(json::parse(b.out)));
}

TEST_F(Cli, SweepOnPlantedMinimum) {
  const auto inst = planted::rank_deficient_minimum(12);
  save_dataset(dir_ / "d", inst.data);
  save_weights(dir_ / "d" / "weights", inst.w);
  const Invocation r = run("perturb sweep --data " + path("d") + " --delta 1e-3 --save " + path("s"));
  ASSERT_EQ(r.status, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["result"]["product_rank"], 3);
  EXPECT_LE(std::abs(j["result"]["loss_delta"].get<double>()), 1e-9);
  EXPECT_EQ(load_weights(path("s")).layer(1).rows(), 4u);
}

TEST_F(Cli, RepairUsesOneBasedLayer) {
  const auto inst = planted::rank_deficient_minimum(13);
  save_dataset(dir_ / "d", inst.data);
  save_weights(dir_ / "d" / "weights", inst.w);
  const Invocation r = run("perturb repair --data " + path("d") + " --layer 2");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["result"]["per_layer_ranks"][1], 4);
  EXPECT_NE(run("perturb repair --data " + path("d") + " --layer 0").status, 0);
}

TEST_F(Cli, FactorRecoversTarget) {
  save_weights(dir_ / "w", WeightStack({Matrix::identity(2), Matrix::identity(2)}));
  const Matrix r{{1.0001, 2e-5}, {-3e-5, 0.9999}};
  io::save_matrix(dir_ / "r.txt", r);
  const Invocation inv = run("perturb factor --weights " + path("w") + " --target " + path("r.txt") + " --save " + path("f"));
  ASSERT_EQ(inv.status, 0) << inv.err;
  EXPECT_LE(max_abs_diff(product(load_weights(path("f"))), r), 1e-12);
}

TEST_F(Cli, VerifyShallow) {
  const Invocation r = run("verify --theorem 2 --dims 5,2,5 --trials 10 --seed 1");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(json::parse(r.out)["passed"].get<bool>());
}

TEST_F(Cli, VerifyLandscape) {
  const Invocation r = run("verify --theorem 3 --dims 4,3,2,3,4 --trials 50 --seed 1 --parallel 2");
  ASSERT_EQ(r.status, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["details"]["experiment"]["global_fraction"], 1.0);
}

TEST_F(Cli, VerifyWitnessRejectsMidTrainingCheckpoint) {
  ASSERT_EQ(run("gen --dims 3,2,3 --samples 6 --seed 4 --out " + path("g")).status, 0);
  ASSERT_EQ(run("train --data " + path("g") + " --save " + path("w") + " --max-iters 3 --out " + path("t.json")).status,
            0);
  const Invocation r = run("verify --theorem 1 --data " + path("g") + " --weights " + path("w"));
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("checkpoint.witness"), std::string::npos) << r.err;
}

TEST_F(Cli, CompleteIsDeterministic) {
  const Invocation a = run("complete --trials 5 --seed 3");
  const Invocation b = run("complete --trials 5 --seed 3");
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(strip_duration(json::parse(a.out)), strip_duration(json::parse(b.out)));
  EXPECT_TRUE(json::parse(a.out)["result"]["empirical"].get<bool>());
}

TEST_F(Cli, MalformedMatrixFileNamesError) {
  ASSERT_EQ(run("gen --dims 3,2,3 --samples 6 --out " + path("g")).status, 0);
  std::ofstream(path("g") + "/X.txt") << "1,2\nbad\n";
  const Invocation r = run("analyze --data " + path("g"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("IoError"), std::string::npos) << r.err;
}
