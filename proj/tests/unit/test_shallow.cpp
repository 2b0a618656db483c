#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "landscape/error.hpp"
#include "landscape/random.hpp"
#include "landscape/shallow.hpp"
#include "oracles.hpp"

using namespace landscape;

namespace {

BlockSpectrum spectrum_of(std::vector<double> values, std::vector<std::size_t> mult) {
  return BlockSpectrum{std::move(values), std::move(mult)};
}

Dataset random_dataset(std::size_t d0, std::size_t dh, std::size_t m, std::mt19937_64& rng) {
  return Dataset(gaussian_matrix(d0, m, rng), gaussian_matrix(dh, m, rng));
}

// Un-halved reduced objective ‖T − diag(λ)‖².
double h_value(const Matrix& t, const BlockSpectrum& s) {
  Matrix target(s.total(), s.total());
  for (std::size_t i = 0; i < s.block_count(); ++i)
    for (std::size_t j = 0; j < s.multiplicities[i]; ++j) target(s.offset(i) + j, s.offset(i) + j) = s.values[i];
  return frobenius_distance_squared(t, target);
}

}  // namespace

TEST(BlockSpectrum, FromSortedGroupsRuns) {
  const std::vector<double> v{3, 3, 2, 0, 0};
  const BlockSpectrum s = BlockSpectrum::from_sorted(v);
  EXPECT_EQ(s.values, (std::vector<double>{3, 2, 0}));
  EXPECT_EQ(s.multiplicities, (std::vector<std::size_t>{2, 1, 2}));
  EXPECT_EQ(s.total(), 5u);
  EXPECT_EQ(s.offset(2), 3u);
  EXPECT_TRUE(s.is_zero_block(2));
  EXPECT_FALSE(s.is_zero_block(1));
  EXPECT_THROW(BlockSpectrum::from_sorted(std::vector<double>{1, 2}), PreconditionError);
  EXPECT_THROW(BlockSpectrum::from_sorted(std::vector<double>{1, -1}), PreconditionError);
}

TEST(ShallowLoss, HandValues) {
  const Dataset data(Matrix::identity(2), Matrix::identity(2));
  EXPECT_DOUBLE_EQ(shallow_loss(Matrix::identity(2), data), 0.0);
  EXPECT_DOUBLE_EQ(shallow_loss(Matrix(2, 2), data), 1.0);
  EXPECT_THROW(shallow_loss(Matrix(3, 2), data), DimensionError);
}

TEST(ReduceToDiagonal, ValueIdentity) {
  // F(R) = ½‖T − Σ₂‖² + constant for every R, with T the reduced image.
  auto rng = make_generator(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Dataset data = random_dataset(3, 4, 7, rng);
    const ReducedProblem p = reduce_to_diagonal(data);
    const Matrix r = gaussian_matrix(4, 3, rng);
    EXPECT_NEAR(p.value(p.to_reduced(r)) + p.constant, shallow_loss(r, data), 1e-10 * (1 + shallow_loss(r, data)));
    EXPECT_LE(max_abs_diff(p.from_reduced(p.to_reduced(r)), r), 1e-10);
  }
}

TEST(ReduceToDiagonal, ConstantCapturesEnergyOutsideRowSpace) {
  auto rng = make_generator(32);
  const Dataset data = random_dataset(2, 2, 6, rng);
  const ReducedProblem p = reduce_to_diagonal(data);
  EXPECT_GT(p.constant, 0.0);
  const Matrix best = global_minimizer(data, 2);
  EXPECT_NEAR(shallow_loss(best, data), p.constant, 1e-10 * (1 + p.constant));
}

TEST(ReduceToDiagonal, OptionalTarget) {
  auto rng = make_generator(33);
  const Dataset data = random_dataset(2, 3, 5, rng);
  const Matrix r = gaussian_matrix(3, 2, rng);
  const ReducedProblem p = reduce_to_diagonal(data, &r);
  ASSERT_TRUE(p.reduced_target.has_value());
  EXPECT_LE(max_abs_diff(*p.reduced_target, p.to_reduced(r)), 1e-14);
  EXPECT_EQ(p.square_target().rows(), 3u);
}

TEST(RankAllocation, Greedy) {
  const auto s = spectrum_of({3, 2, 1}, {1, 1, 1});
  EXPECT_EQ(rank_allocation(s, 2).ranks, (std::vector<std::size_t>{1, 1, 0}));
  EXPECT_EQ(rank_allocation(s, 0).ranks, (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(rank_allocation(spectrum_of({2, 1}, {2, 3}), 3).ranks, (std::vector<std::size_t>{2, 1}));
}

TEST(RankAllocation, MatchesBruteForce) {
  auto rng = make_generator(34);
  std::uniform_int_distribution<int> mult(1, 3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> values;
    std::vector<std::size_t> m;
    double v = 5.0;
    for (int i = 0; i < 4; ++i) {
      v -= 0.3 + std::uniform_real_distribution<double>(0, 1)(rng);
      values.push_back(std::max(v, 0.05));
      m.push_back(static_cast<std::size_t>(mult(rng)));
      if (v <= 0.05) break;
    }
    const auto s = spectrum_of(values, m);
    for (std::size_t k = 0; k <= s.total(); ++k)
      EXPECT_NEAR(global_min_value(s, k), oracle::brute_force_allocation(values, m, k), 1e-12);
  }
}

TEST(GlobalMinValue, HandValues) {
  const auto s = spectrum_of({3, 2, 1}, {1, 1, 1});
  EXPECT_DOUBLE_EQ(global_min_value(s, 3), 0.0);
  EXPECT_DOUBLE_EQ(global_min_value(s, 0), 7.0);
  EXPECT_DOUBLE_EQ(global_min_value(s, 2), 0.5);
}

TEST(GlobalMinimizer, DiagonalTarget) {
  const Dataset data(Matrix::identity(2), Matrix{{3, 0}, {0, 1}});
  const Matrix r = global_minimizer(data, 1);
  EXPECT_LE(max_abs_diff(r, Matrix{{3, 0}, {0, 0}}), 1e-14);
  EXPECT_NEAR(shallow_loss(r, data), 0.5, 1e-14);
  EXPECT_THROW(global_minimizer(data, 3), PreconditionError);
}

TEST(GlobalMinimizer, UnconstrainedExactFit) {
  auto rng = make_generator(35);
  const Matrix x = gaussian_matrix(3, 3, rng);
  const Matrix y = gaussian_matrix(3, 3, rng);
  const Dataset data(x, y);
  const Matrix r = global_minimizer(data, 3);
  EXPECT_LE(shallow_loss(r, data), 1e-18 * (1 + frobenius_norm_squared(y)) + 1e-20);
  EXPECT_LE(max_abs_diff(r * x, y), 1e-9);
}

TEST(GlobalMinimizer, MatchesEckartYoungOracle) {
  auto rng = make_generator(36);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset data = random_dataset(4, 3, 8, rng);
    const ReducedProblem p = reduce_to_diagonal(data);
    for (std::size_t k = 0; k <= 3; ++k) {
      const double closed = global_min_value(p.spectrum(), k) + p.constant;
      const double ref = oracle::rank_constrained_residual(data.X(), data.Y(), k);
      EXPECT_LE(oracle::relative_error(closed, ref), 1e-8);
      EXPECT_LE(oracle::relative_error(shallow_loss(global_minimizer(data, k), data), ref), 1e-8);
      EXPECT_LE(numerical_rank(global_minimizer(data, k)), k);
    }
  }
}

TEST(AnalyzeCandidate, TruncationIsGlobal) {
  const auto s = spectrum_of({3, 2, 1}, {1, 1, 1});
  const BlockReport r = analyze_candidate(Matrix::diagonal(std::vector<double>{3, 2, 0}), s);
  EXPECT_TRUE(r.is_block_diagonal);
  EXPECT_TRUE(r.is_symmetric);
  EXPECT_TRUE(r.is_projection);
  EXPECT_TRUE(r.is_global);
  EXPECT_EQ(r.allocation.ranks, (std::vector<std::size_t>{1, 1, 0}));
}

TEST(AnalyzeCandidate, SkippedLargerBlockIsNotGlobal) {
  const auto s = spectrum_of({3, 2}, {1, 1});
  const BlockReport r = analyze_candidate(Matrix::diagonal(std::vector<double>{0, 2}), s, 1e-8, 1);
  EXPECT_TRUE(r.is_block_diagonal);
  EXPECT_TRUE(r.is_projection);
  EXPECT_FALSE(r.is_global);
  EXPECT_DOUBLE_EQ(r.value, 4.5);
  EXPECT_DOUBLE_EQ(r.global_value, 2.0);
}

TEST(AnalyzeCandidate, OffBlockEntry) {
  const auto s = spectrum_of({3, 2}, {1, 1});
  Matrix t = Matrix::diagonal(std::vector<double>{3, 0});
  t(0, 1) = 0.1;
  EXPECT_FALSE(analyze_candidate(t, s).is_block_diagonal);
  EXPECT_THROW(analyze_candidate(Matrix(3, 3), s), DimensionError);
}

TEST(AnalyzeCandidate, FormatReport) {
  const auto s = spectrum_of({3, 2}, {1, 1});
  const std::string text = format_report(analyze_candidate(Matrix::diagonal(std::vector<double>{3, 0}), s));
  EXPECT_NE(text.find("is_global: true"), std::string::npos);
  EXPECT_NE(text.find("ranks: 1,0"), std::string::npos);
}

TEST(DescentPath, EndpointsAndClosedForm) {
  const auto s = spectrum_of({2, 1}, {1, 1});
  const Matrix tstar = Matrix::diagonal(std::vector<double>{0, 1});
  EXPECT_EQ(descent_path(tstar, s, 0, 1, 0.0), tstar);
  const Matrix end = descent_path(tstar, s, 0, 1, std::numbers::pi / 2);
  EXPECT_NEAR(h_value(end, s) - h_value(tstar, s), 1.0 - 4.0, 1e-12);
  EXPECT_EQ(numerical_rank(end), 1u);
}

TEST(DescentPath, StrictlyDecreasingOnGrid) {
  const auto s = spectrum_of({2, 1}, {1, 1});
  const Matrix tstar = Matrix::diagonal(std::vector<double>{0, 1});
  double prev = h_value(tstar, s);
  for (int i = 1; i <= 50; ++i) {
    const double th = std::numbers::pi / 2 * i / 50.0;
    const double v = h_value(descent_path(tstar, s, 0, 1, th), s);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(DescentPath, Errors) {
  const auto s = spectrum_of({2, 1}, {1, 1});
  // Block 0 is already full: no spare capacity.
  EXPECT_THROW(descent_path(Matrix::diagonal(std::vector<double>{2, 1}), s, 0, 1, 0.3), ConstructionError);
  // Block 1 holds no rank.
  EXPECT_THROW(descent_path(Matrix::diagonal(std::vector<double>{0, 0}), s, 0, 1, 0.3), ConstructionError);
  EXPECT_THROW(descent_path(Matrix::diagonal(std::vector<double>{0, 1}), s, 1, 0, 0.3), PreconditionError);
  EXPECT_THROW(descent_path(Matrix{{0, 0.5}, {0.5, 1}}, s, 0, 1, 0.3), PreconditionError);
}
