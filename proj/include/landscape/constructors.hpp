#pragma once
// Loss-preserving repairs of weight stacks and factorization of perturbed
// products. Layer indices are 0-based (layer l is W_{l+1}); the bottleneck p
// is a width index as in NetworkDims.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "landscape/matrix.hpp"
#include "landscape/model.hpp"

namespace landscape {

/// Repairs may move each entry by at most delta / 2 (full_rank_perturbation)
/// or delta (rank_restoring_sweep). mu is the first step tried along the
/// repair direction; it is halved until the result is full rank and inside
/// the budget.
struct PerturbationBudget {
  double delta = 1e-3;
  double mu = 1.0;

  PerturbationBudget() = default;
  /// PreconditionError unless both are finite and positive.
  PerturbationBudget(double delta, double mu = 1.0);
};

struct RepairResult {
  WeightStack repaired;
  double displacement = 0.0;  // max over layers of ‖new − old‖_∞ (entrywise)
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::size_t product_rank = 0;
  std::vector<std::size_t> layer_ranks;
};

/// Replaces layer `l` by a full-rank matrix with the same loss. `w` must
/// satisfy the layerwise normal equation BᵀB·W_l·AAᵀ = BᵀY·Aᵀ to 1e-8
/// relative (NotLayerwiseMinimumError otherwise). A layer that is already
/// full rank comes back unchanged. PreconditionError if no loss-preserving
/// change can reach full rank; ConstructionError if the step underflows.
RepairResult full_rank_perturbation(const WeightStack& w, std::size_t l, const Dataset& data,
                                    const PerturbationBudget& budget);

/// Makes every layer full rank, then every partial product through the
/// bottleneck, keeping the loss. `w` must be a critical point (gradient norm
/// ≤ 1e-8·(1 + ‖Y‖_F)). ConstructionError if the product rank still differs
/// from d_p afterwards.
RepairResult rank_restoring_sweep(const WeightStack& w, const Dataset& data,
                                  const PerturbationBudget& budget);

/// B̄ = B + A⁺·(R̄ − A·B), so A·B̄ = R̄. A must have full row rank.
Matrix two_factor_perturbation(const Matrix& a, const Matrix& b, const Matrix& rbar);

/// Ā = A + (R̄ − A·B)·B⁺, so Ā·B = R̄. B must have full column rank.
Matrix two_factor_perturbation_left(const Matrix& a, const Matrix& b, const Matrix& rbar);

/// Factors R (a perturbation of product(W̄) with rank ≤ d_p) into a stack
/// whose layers move continuously with R. rank(product(W̄)) must equal d_p.
WeightStack factor_perturbed_product(const WeightStack& wbar, const Matrix& r);

struct WitnessOptions {
  std::size_t samples = 200;
  /// Perturbation radius for the sampled certificate; 0 means budget.delta.
  double radius = 0.0;
  std::uint64_t seed = 0;
};

struct WitnessResult {
  Matrix r_hat;
  std::size_t rank = 0;
  double deep_loss = 0.0;
  double shallow_loss = 0.0;
  RepairResult sweep;
  std::size_t samples = 0;
  /// Smallest F(R̂ + sampled rank-d_p perturbation) − F(R̂).
  double min_sampled_change = 0.0;
};

/// Turns a local minimum of the deep loss into a rank-d_p local minimum of the
/// shallow problem with the same value. PreconditionError unless `w` is
/// numerically a local minimum (gradient ≤ 1e-8·(1 + ‖Y‖_F) and Hessian
/// eigenvalues ≥ −1e-6·λ_max); CertificationError if a sampled rank-d_p
/// perturbation lowers the shallow loss.
WitnessResult deep_to_shallow_witness(const WeightStack& w, const Dataset& data,
                                      const PerturbationBudget& budget,
                                      const WitnessOptions& options = {});

}  // namespace landscape
