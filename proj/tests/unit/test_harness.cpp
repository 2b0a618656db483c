#include <gtest/gtest.h>

#include "landscape/error.hpp"
#include "landscape/harness.hpp"
#include "landscape/linalg.hpp"
#include "landscape/shallow.hpp"
#include "planted.hpp"

using namespace landscape;

namespace {

ExperimentConfig config_for(const char* dims, std::size_t samples, std::size_t trials, std::uint64_t seed = 1) {
  ExperimentConfig c;
  c.dims = NetworkDims::parse(dims);
  c.samples = samples;
  c.trials = trials;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(ExperimentConfig, Validation) {
  ExperimentConfig c = config_for("3,2,3", 4, 1);
  EXPECT_NO_THROW(c.validate());
  c.trials = 0;
  EXPECT_THROW(c.validate(), PreconditionError);
  c = config_for("3,2,3", 4, 1);
  c.grad_tol = -1;
  EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(GenerateInstance, DeterministicAndFullRank) {
  const ExperimentConfig c = config_for("4,3,2,3,4", 10, 1, 7);
  auto [d1, w1] = generate_instance(c, 3);
  auto [d2, w2] = generate_instance(c, 3);
  EXPECT_EQ(d1.X(), d2.X());
  EXPECT_EQ(d1.Y(), d2.Y());
  EXPECT_EQ(w1, w2);
  EXPECT_EQ(numerical_rank(d1.X()), 4u);
  EXPECT_EQ(numerical_rank(d1.Y()), 4u);
  auto [d3, w3] = generate_instance(c, 4);
  EXPECT_NE(d1.X(), d3.X());
}

TEST(GenerateInstance, TooFewSamples) {
  EXPECT_THROW(generate_instance(config_for("4,2,3", 3, 1)), PreconditionError);
}

TEST(GradientDescent, StartAtGlobalMinimum) {
  auto inst = planted::rank_deficient_minimum(3);
  ExperimentConfig c = config_for("3,4,4,3", 8, 1);
  const TrialResult r = gradient_descent(inst.w, inst.data, c);
  EXPECT_EQ(r.iterations, 0u);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.reached_global);
  EXPECT_EQ(r.report.classification, Classification::global_min);
}

TEST(GradientDescent, BacktrackingIsMonotone) {
  ExperimentConfig c = config_for("3,2,3", 6, 1, 5);
  c.record_trajectory = true;
  auto [data, w0] = generate_instance(c);
  const TrialResult r = gradient_descent(w0, data, c);
  ASSERT_GT(r.trajectory.size(), 2u);
  const auto nudged = [&](std::size_t it) {
    return std::find(r.nudges.begin(), r.nudges.end(), it) != r.nudges.end();
  };
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    if (nudged(r.trajectory[i - 1].iteration)) continue;
    EXPECT_LE(r.trajectory[i].loss, r.trajectory[i - 1].loss * (1 + 1e-12) + 1e-12) << i;
  }
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.reached_global);
}

TEST(GradientDescent, HugeFixedStepDiverges) {
  ExperimentConfig c = config_for("3,2,3", 6, 1, 5);
  c.step_policy = StepPolicy::fixed;
  c.step_size = 100.0;
  auto [data, w0] = generate_instance(c);
  EXPECT_THROW(gradient_descent(w0, data, c), DivergenceError);
}

TEST(Classify, SaddleAtZero) {
  const Dataset data(Matrix::identity(2), Matrix{{2, 0}, {0, 1}});
  ExperimentConfig c = config_for("2,2,2", 2, 1);
  const CriticalPointReport r = classify_critical_point(WeightStack::zeros(c.dims), data, c);
  EXPECT_LE(r.gradient_norm, 1e-12);
  EXPECT_LT(r.hessian_min_eig, -1e-6);
  EXPECT_EQ(r.classification, Classification::saddle);
  EXPECT_NEAR(r.global_value, 0.0, 1e-14);
  EXPECT_NEAR(r.loss, 2.5, 1e-14);
}

TEST(Classify, DegenerateAtZeroForDepthThree) {
  const Dataset data(Matrix::identity(2), Matrix{{2, 0}, {0, 1}});
  ExperimentConfig c = config_for("2,2,2,2", 2, 1);
  const CriticalPointReport r = classify_critical_point(WeightStack::zeros(c.dims), data, c);
  EXPECT_EQ(r.classification, Classification::degenerate);
}

TEST(Classify, RandomPointIsNotCritical) {
  ExperimentConfig c = config_for("3,2,3", 6, 1, 9);
  auto [data, w0] = generate_instance(c);
  EXPECT_EQ(classify_critical_point(w0, data, c).classification, Classification::non_critical);
}

TEST(Classify, NamesRoundTrip) {
  EXPECT_EQ(to_string(Classification::global_min), "global-min");
  EXPECT_EQ(parse_step_policy("fixed"), StepPolicy::fixed);
  EXPECT_THROW(parse_step_policy("adam"), PreconditionError);
}

TEST(DeepGlobalValue, UsesBottleneckBudget) {
  const Dataset data(Matrix::identity(2), Matrix{{3, 0}, {0, 1}});
  EXPECT_NEAR(deep_global_value(data, NetworkDims({2, 1, 2})), 0.5, 1e-14);
  EXPECT_NEAR(deep_global_value(data, NetworkDims({2, 2, 2})), 0.0, 1e-14);
}

TEST(Experiment, BottleneckOneAllGlobal) {
  const ExperimentSummary s = no_bad_local_minima_experiment(config_for("3,1,3", 6, 10, 2));
  EXPECT_EQ(s.trials.size(), 10u);
  EXPECT_GT(s.converged, 0u);
  EXPECT_EQ(s.global, s.converged);
  EXPECT_TRUE(s.verified);
  EXPECT_EQ(s.failed, 0u);
}

TEST(Experiment, IndependentOfWorkerCount) {
  ExperimentConfig c = config_for("3,2,3", 5, 6, 4);
  const ExperimentSummary a = no_bad_local_minima_experiment(c);
  c.workers = 3;
  const ExperimentSummary b = no_bad_local_minima_experiment(c);
  ASSERT_EQ(a.trials.size(), b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].iterations, b.trials[i].iterations);
    EXPECT_EQ(a.trials[i].weights, b.trials[i].weights);
    EXPECT_EQ(a.trials[i].report.loss, b.trials[i].report.loss);
  }
}

TEST(MaskedDataset, Sampling) {
  const Matrix y = planted_low_rank(6, 6, 2, 3);
  const NetworkDims dims({6, 2, 6});
  const MaskedDataset m = MaskedDataset::sample(y, dims, 0.7, 1);
  EXPECT_EQ(m.observed().size(), 25u);  // round(0.7·36)
  double s = 0;
  for (double v : m.mask().values()) s += v;
  EXPECT_EQ(s, 25.0);
  EXPECT_FALSE(m.is_full());
  EXPECT_TRUE(MaskedDataset::full(y, dims).is_full());
  EXPECT_THROW(MaskedDataset::sample(y, dims, 0.0, 1), PreconditionError);
  EXPECT_THROW(MaskedDataset::sample(y, dims, 1.5, 1), PreconditionError);
  EXPECT_EQ(MaskedDataset::sample(y, dims, 0.7, 1).observed(), m.observed());
}

TEST(MaskedExperiment, FullMaskMatchesEckartYoung) {
  const Matrix y = planted_low_rank(4, 4, 2, 5) + 0.1 * Matrix::identity(4);
  ExperimentConfig c = config_for("4,2,4", 4, 5, 6);
  const MaskedSummary s = masked_completion_experiment(c, MaskedDataset::full(y, c.dims));
  ASSERT_TRUE(s.global_value.has_value());
  EXPECT_NEAR(s.best_value, *s.global_value, 1e-6 * (1 + *s.global_value));
  EXPECT_GT(s.success_fraction, 0.0);
}

TEST(MaskedExperiment, Deterministic) {
  const Matrix y = planted_low_rank(6, 6, 2, 7);
  ExperimentConfig c = config_for("6,2,6", 6, 4, 8);
  const MaskedDataset m = MaskedDataset::sample(y, c.dims, 0.7, 8);
  const MaskedSummary a = masked_completion_experiment(c, m);
  const MaskedSummary b = masked_completion_experiment(c, m);
  EXPECT_EQ(a.best_value, b.best_value);
  EXPECT_EQ(a.success_fraction, b.success_fraction);
  EXPECT_FALSE(a.global_value.has_value());
}

TEST(PlantedLowRank, HasRequestedRank) {
  EXPECT_EQ(numerical_rank(planted_low_rank(6, 5, 2, 1)), 2u);
}
