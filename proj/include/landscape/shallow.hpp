#pragma once
// The rank-constrained shallow problem
//
//   F(R) = ½‖R·X − Y‖_F²   subject to rank(R) ≤ k,
//
// its reduction to H(T) = ½‖T − Σ₂‖_F² with a diagonal target, the closed-form
// global optimum, and tools for inspecting candidate minima in the reduced
// coordinates.
//
// Reduction: X = U₁·Σ̂₁·V₁ᵀ (thin, V₁ is m × d_0), Ŷ = Y·V₁ = U₂·Σ₂·V₂ᵀ with
// U₂, V₂ square. For S = R·U₁ and T = U₂ᵀ·S·Σ̂₁·V₂,
//
//   F(R) = H(T) + ½‖Y − Y·V₁·V₁ᵀ‖_F²,   rank(T) = rank(R).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "landscape/linalg.hpp"
#include "landscape/matrix.hpp"
#include "landscape/model.hpp"

namespace landscape {

/// Distinct values λ_1 > … > λ_r ≥ 0 of a diagonal target with their
/// multiplicities.
struct BlockSpectrum {
  std::vector<double> values;
  std::vector<std::size_t> multiplicities;

  /// Groups a non-increasing list; each block's value is the mean of its run.
  static BlockSpectrum from_sorted(std::span<const double> sorted_desc,
                                   double rel_tol = kGroupingTol);

  std::size_t block_count() const noexcept { return values.size(); }
  /// Σ m_i, the side length of the diagonal target.
  std::size_t total() const noexcept;
  /// First diagonal index of block i.
  std::size_t offset(std::size_t i) const;
  /// λ_i at or below kGroupingTol·λ_1 (or λ_1 = 0).
  bool is_zero_block(std::size_t i) const;
};

struct ReducedProblem {
  Matrix U1;      // d_0 × d_0
  Matrix Sigma1;  // d_0 × d_0, diagonal, positive
  Matrix V1;      // m × d_0
  Matrix U2;      // d_H × d_H
  Matrix V2;      // d_0 × d_0
  Matrix Sigma2;  // d_H × d_0, rectangular diagonal, non-increasing
  double constant = 0.0;
  /// T for the R passed to reduce_to_diagonal, if any.
  std::optional<Matrix> reduced_target;

  Matrix to_reduced(const Matrix& r) const;
  Matrix from_reduced(const Matrix& t) const;
  /// H(T) = ½‖T − Σ₂‖_F² for T of shape d_H × d_0.
  double value(const Matrix& t) const;
  /// Σ₂ zero-padded to q × q, q = max(d_H, d_0).
  Matrix square_target() const;
  /// Spectrum of square_target().
  BlockSpectrum spectrum() const;
};

/// Per-block ranks d_{p_i}.
struct RankAllocation {
  std::vector<std::size_t> ranks;
  std::size_t total() const noexcept;
  friend bool operator==(const RankAllocation&, const RankAllocation&) = default;
};

struct BlockReport {
  bool is_block_diagonal = false;
  bool is_symmetric = false;
  bool is_projection = false;
  std::vector<double> projection_defect;
  RankAllocation allocation;
  std::size_t budget = 0;
  bool is_global = false;
  double value = 0.0;         // ½‖T − Σ₂‖_F²
  double global_value = 0.0;  // global_min_value(spectrum, budget)
};

double shallow_loss(const Matrix& r, const Dataset& data);

/// PreconditionError if X is not full row rank; DimensionError if `r` does
/// not have shape d_H × d_0.
ReducedProblem reduce_to_diagonal(const Dataset& data, const Matrix* r = nullptr);

/// Greedy allocation: fill the largest blocks first. Zero blocks never
/// receive rank.
RankAllocation rank_allocation(const BlockSpectrum& spectrum, std::size_t k);

/// ½ Σ_i (m_i − d_{p_i})·λ_i² for the greedy allocation.
double global_min_value(const BlockSpectrum& spectrum, std::size_t k);

/// A rank-≤k minimizer of shallow_loss. Ties at the allocation boundary keep
/// the leading coordinates. PreconditionError if k > min(d_H, d_0).
Matrix global_minimizer(const Dataset& data, std::size_t k);

/// Inspects a candidate T (square, side spectrum.total(), reduced
/// coordinates) for the structure of a critical point: block diagonal, each
/// block symmetric with T_i/λ_i a projection. `budget` defaults to the
/// candidate's own total rank.
BlockReport analyze_candidate(const Matrix& t, const BlockSpectrum& spectrum, double tol = 1e-8,
                              std::optional<std::size_t> budget = std::nullopt);

/// The rank-preserving path T(θ) = T* − λ_{i2}·u·uᵀ + c(θ)·w(θ)·w(θ)ᵀ that
/// moves one unit of rank from block i2 to block i1 (0-based, i1 < i2), with
/// c(θ) = λ_{i1}·sin²θ + λ_{i2}·cos²θ and w(θ) = u·cosθ + ū·sinθ.
/// Along it the un-halved objective changes by λ_{i2}² − c(θ)².
Matrix descent_path(const Matrix& tstar, const BlockSpectrum& spectrum, std::size_t i1,
                    std::size_t i2, double theta);

/// "key: value" lines.
std::string format_report(const RankAllocation& alloc);
std::string format_report(const BlockReport& report);

}  // namespace landscape
