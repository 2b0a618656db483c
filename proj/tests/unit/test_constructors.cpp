#include <gtest/gtest.h>

#include "landscape/constructors.hpp"
#include "landscape/error.hpp"
#include "landscape/linalg.hpp"
#include "landscape/random.hpp"
#include "landscape/shallow.hpp"
#include "planted.hpp"

using namespace landscape;

namespace {

const Dataset& two_by_two_data() {
  static const Dataset data(Matrix::identity(2), Matrix{{2.001, 0}, {0, 0.001}});
  return data;
}

// Layer 0 is layerwise optimal for the data above but rank one.
WeightStack two_by_two_stack() { return WeightStack({Matrix{{1.0005, 0}, {0, 0}}, Matrix{{2, 0}, {0, 0}}}); }

}  // namespace

TEST(PerturbationBudget, Validation) {
  EXPECT_THROW(PerturbationBudget(0.0), PreconditionError);
  EXPECT_THROW(PerturbationBudget(1e-3, -1.0), PreconditionError);
  EXPECT_NO_THROW(PerturbationBudget(1e-3, 0.5));
}

TEST(FullRankPerturbation, FullRankLayerUnchanged) {
  auto inst = planted::rank_deficient_minimum(1);
  const RepairResult r = full_rank_perturbation(inst.w, 0, inst.data, PerturbationBudget(1e-3));
  EXPECT_EQ(r.repaired, inst.w);
  EXPECT_EQ(r.displacement, 0.0);
}

TEST(FullRankPerturbation, RepairsRankOneLayer) {
  const RepairResult r = full_rank_perturbation(two_by_two_stack(), 0, two_by_two_data(), PerturbationBudget(1e-3));
  EXPECT_EQ(numerical_rank(r.repaired.layer(0)), 2u);
  EXPECT_NEAR(r.loss_after, r.loss_before, 1e-9);
  EXPECT_LE(r.displacement, 0.5e-3);
  EXPECT_GT(r.displacement, 0.0);
}

TEST(FullRankPerturbation, DisplacementLadder) {
  auto inst = planted::rank_deficient_minimum(2);
  for (double delta : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const RepairResult r = full_rank_perturbation(inst.w, 1, inst.data, PerturbationBudget(delta));
    EXPECT_EQ(numerical_rank(r.repaired.layer(1)), 4u) << delta;
    EXPECT_LE(r.displacement, delta / 2) << delta;
    EXPECT_NEAR(r.loss_after, r.loss_before, 1e-9) << delta;
  }
}

TEST(FullRankPerturbation, RejectsNonOptimalLayer) {
  auto rng = make_generator(3);
  const WeightStack w({gaussian_matrix(2, 2, rng), Matrix{{1, 0}, {0, 0}}});
  EXPECT_THROW(full_rank_perturbation(w, 1, two_by_two_data(), PerturbationBudget()), NotLayerwiseMinimumError);
}

TEST(RankRestoringSweep, PlantedMinimum) {
  auto inst = planted::rank_deficient_minimum(4);
  const RepairResult r = rank_restoring_sweep(inst.w, inst.data, PerturbationBudget(1e-3));
  EXPECT_EQ(r.product_rank, 3u);
  EXPECT_NEAR(r.loss_after, r.loss_before, 1e-9);
  for (std::size_t rank : r.layer_ranks) EXPECT_GE(rank, 3u);
  EXPECT_EQ(r.layer_ranks[1], 4u);
  EXPECT_LE(r.displacement, 0.5e-3);
}

TEST(RankRestoringSweep, SaddleWithCollapsedMiddleProductCannotBeRepaired) {
  // Critical point with product diag(3,0,0), built by zeroing one direction of
  // the rank-2 optimum and re-fitting the outer layers. Loss-preserving moves
  // keep the product fixed, so rank 2 is out of reach; once the lower layers
  // are repaired the top layer is no longer layerwise optimal (the point is a
  // saddle), and the sweep refuses.
  const Dataset data(Matrix::identity(3), Matrix{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
  const WeightStack w({Matrix{{1, 0, 0}, {0, 0, 0}}, Matrix{{1, 0}, {0, 0}}, Matrix{{3, 0}, {0, 0}, {0, 0}}});
  EXPECT_THROW(rank_restoring_sweep(w, data, PerturbationBudget(1e-3)), NotLayerwiseMinimumError);
}

TEST(RankRestoringSweep, RejectsNonCriticalPoint) {
  auto rng = make_generator(5);
  const Dataset data(Matrix::identity(2), Matrix::identity(2));
  const WeightStack w({gaussian_matrix(2, 2, rng), gaussian_matrix(2, 2, rng)});
  EXPECT_THROW(rank_restoring_sweep(w, data, PerturbationBudget()), PreconditionError);
}

TEST(TwoFactorPerturbation, HandCase) {
  const Matrix a{{1, 0}};
  const Matrix b{{1}, {0}};
  const Matrix bbar = two_factor_perturbation(a, b, Matrix{{1.1}});
  EXPECT_LE(max_abs_diff(bbar, Matrix{{1.1}, {0}}), 1e-15);
  EXPECT_EQ(two_factor_perturbation(a, b, a * b), b);
}

TEST(TwoFactorPerturbation, RandomResidual) {
  auto rng = make_generator(6);
  const Matrix a = gaussian_matrix(2, 4, rng);
  const Matrix b = gaussian_matrix(4, 3, rng);
  const Matrix rbar = a * b + 1e-6 * gaussian_matrix(2, 3, rng);
  EXPECT_LE(max_abs_diff(a * two_factor_perturbation(a, b, rbar), rbar), 1e-12);
  EXPECT_THROW(two_factor_perturbation(Matrix{{1, 0}, {2, 0}}, Matrix(2, 1), Matrix(2, 1)), PreconditionError);
}

TEST(TwoFactorPerturbation, LeftVariant) {
  auto rng = make_generator(7);
  const Matrix a = gaussian_matrix(3, 4, rng);
  const Matrix b = gaussian_matrix(4, 2, rng);
  const Matrix rbar = a * b + 1e-6 * gaussian_matrix(3, 2, rng);
  EXPECT_LE(max_abs_diff(two_factor_perturbation_left(a, b, rbar) * b, rbar), 1e-12);
}

TEST(FactorPerturbedProduct, UnperturbedReturnsProduct) {
  auto rng = make_generator(8);
  const WeightStack w({gaussian_matrix(2, 3, rng), gaussian_matrix(3, 2, rng), gaussian_matrix(2, 3, rng)});
  const WeightStack out = factor_perturbed_product(w, product(w));
  EXPECT_LE(max_abs_diff(product(out), product(w)), 1e-12);
  for (std::size_t l = 0; l < w.depth(); ++l) EXPECT_LE(max_abs_diff(out.layer(l), w.layer(l)), 1e-9);
}

TEST(FactorPerturbedProduct, IdentityPair) {
  auto rng = make_generator(9);
  const WeightStack w({Matrix::identity(2), Matrix::identity(2)});
  const Matrix r = Matrix::identity(2) + 1e-4 * gaussian_matrix(2, 2, rng);
  const WeightStack out = factor_perturbed_product(w, r);
  EXPECT_LE(max_abs_diff(product(out), r), 1e-12);
  for (const Matrix& m : out.layers()) EXPECT_LE(max_abs_diff(m, Matrix::identity(2)), 1e-2);
}

TEST(FactorPerturbedProduct, RankPreconditions) {
  const WeightStack w({Matrix{{1, 0}, {0, 0}}, Matrix::identity(2)});
  EXPECT_THROW(factor_perturbed_product(w, Matrix::identity(2)), PreconditionError);
  const WeightStack narrow({Matrix{{1, 0}}, Matrix{{1}, {0}}});
  EXPECT_THROW(factor_perturbed_product(narrow, Matrix::identity(2)), PreconditionError);
}

TEST(Witness, GlobalMinimizerFactors) {
  auto inst = planted::rank_deficient_minimum(10);
  WitnessOptions opt;
  opt.samples = 50;
  const WitnessResult res = deep_to_shallow_witness(inst.w, inst.data, PerturbationBudget(1e-3), opt);
  EXPECT_EQ(res.rank, 3u);
  EXPECT_NEAR(res.shallow_loss, res.deep_loss, 1e-9 * (1 + res.deep_loss));
  const ReducedProblem p = reduce_to_diagonal(inst.data);
  EXPECT_NEAR(res.shallow_loss, global_min_value(p.spectrum(), 3) + p.constant, 1e-9 * (1 + res.deep_loss));
  EXPECT_GE(res.min_sampled_change, -1e-9 * (1 + res.deep_loss));
}

TEST(Witness, RejectsNonMinimum) {
  auto rng = make_generator(11);
  const Dataset data(gaussian_matrix(2, 4, rng), gaussian_matrix(2, 4, rng));
  const WeightStack w({gaussian_matrix(2, 2, rng), gaussian_matrix(2, 2, rng)});
  EXPECT_THROW(deep_to_shallow_witness(w, data, PerturbationBudget()), PreconditionError);
}
