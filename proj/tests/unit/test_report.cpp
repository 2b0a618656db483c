#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "landscape/report.hpp"

using namespace landscape;

TEST(Report, ManifestFields) {
  RunManifest m;
  m.command = "gen";
  m.inputs = {"a"};
  m.outputs = {"b"};
  const auto j = report_json(m);
  EXPECT_EQ(j["command"], "gen");
  EXPECT_EQ(j["version"], tool_version());
  EXPECT_TRUE(j.contains("duration_seconds"));
  EXPECT_EQ(j["inputs"][0], "a");
}

TEST(Report, NonFiniteNumbersBecomeStrings) {
  CriticalPointReport r;
  r.loss = std::numeric_limits<double>::infinity();
  const auto j = report_json(r);
  EXPECT_TRUE(j["loss"].is_string());
  EXPECT_EQ(j["classification"], "non-critical");
  // Must serialize without throwing.
  EXPECT_FALSE(j.dump().empty());
}

TEST(Report, RepairResultFields) {
  RepairResult r{WeightStack({Matrix::identity(2)}), 1e-4, 2.0, 2.0 + 1e-12, 2, {2}};
  const auto j = report_json(r);
  EXPECT_EQ(j["product_rank"], 2);
  EXPECT_NEAR(j["loss_delta"].get<double>(), 1e-12, 1e-15);
  EXPECT_EQ(j["per_layer_ranks"][0], 2);
}

TEST(Report, TrajectoryCsv) {
  std::ostringstream os;
  write_trajectory_csv(os, {{0, 1.5, 2.0}, {1, 1.0, 0.5}});
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "iteration,loss,gradient_norm");
  EXPECT_NE(os.str().find("1,1,0.5"), std::string::npos);
}
