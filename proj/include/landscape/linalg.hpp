#pragma once
// Deterministic dense linear algebra: SVD, pseudo-inverse, numerical rank,
// principal angles between subspaces, and the Wedin sin-theta bound.

#include <cstddef>
#include <span>
#include <vector>

#include "landscape/matrix.hpp"

namespace landscape {

/// Singular values at or below this fraction of σ_max count as zero.
inline constexpr double kDefaultRankTol = 1e-10;
/// Relative tolerance for treating two singular values as one repeated value.
inline constexpr double kGroupingTol = 1e-8;

/// Thin SVD: for an m×n input, U is m×q, V is n×q, S has q = min(m, n)
/// non-increasing entries.
struct SvdTriple {
  Matrix U;
  std::vector<double> S;
  Matrix V;

  Matrix reconstruct() const;
};

/// One-sided Jacobi SVD. Throws DecompositionError if the sweep limit is hit
/// and NonFiniteError on NaN/Inf input.
SvdTriple svd(const Matrix& m);

/// Moore–Penrose pseudo-inverse; singular values ≤ tol·σ_max are dropped.
Matrix pseudo_inverse(const Matrix& m, double tol = kDefaultRankTol);

/// Number of singular values strictly above tol·σ_max; 0 for the zero matrix.
/// tol must lie in (0, 1).
std::size_t numerical_rank(const Matrix& m, double tol = kDefaultRankTol);

/// Sines of the principal angles between span(U1) and span(U2), ascending.
/// Both inputs need orthonormal columns and equal shapes.
std::vector<double> subspace_sin_angles(const Matrix& u1, const Matrix& u2);

struct WedinReport {
  double rho = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Evaluates both sides of Wedin's bound for the leading-k singular subspaces
/// of `mbar` (reference) and `m` (perturbed). Needs rows ≥ cols and
/// 1 ≤ k < cols; GapViolationError when the gap ρ is not positive.
WedinReport wedin_bound_check(const Matrix& mbar, const Matrix& m, std::size_t k);

/// Half-open index range [begin, end) of one group of equal singular values.
struct IndexBlock {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const IndexBlock&, const IndexBlock&) = default;
};

/// Groups a non-increasing list into runs whose values lie within
/// rel_tol·values[0] of the run's first entry.
std::vector<IndexBlock> group_equal_values(std::span<const double> sorted_desc,
                                           double rel_tol = kGroupingTol);

/// Factorization M = U·core·Vᵀ with U, V rotated to sit as close as possible
/// to a reference SVD. `core` is block diagonal over `blocks` (the groups of
/// repeated reference singular values) and is diagonal when every block has
/// size one, in which case (U, diag(values), V) is an ordinary SVD of M.
struct AlignedSvd {
  Matrix U;
  Matrix core;
  Matrix V;
  std::vector<double> values;
  std::vector<IndexBlock> blocks;

  Matrix reconstruct() const { return U * times_transpose(core, V); }
};

/// Aligns an SVD of `m` to the SVD of the full-rank reference `mbar` by
/// per-block orthogonal Procrustes. PreconditionError if `mbar` is rank
/// deficient or the perturbation collapses a singular value of `m`.
AlignedSvd perturbed_svd_align(const Matrix& mbar, const Matrix& m);

/// Same alignment restricted to the leading `rank` singular triplets; `mbar`
/// only needs σ_rank > 0.
AlignedSvd aligned_truncated_svd(const Matrix& mbar, const Matrix& m, std::size_t rank);

/// Eigenvalues of a symmetric matrix in ascending order.
std::vector<double> symmetric_eigenvalues(const Matrix& sym);

/// Orthonormal basis (as columns) of the orthogonal complement of span(Q),
/// where Q has orthonormal columns. Deterministic pivoted Gram–Schmidt over
/// the coordinate vectors.
Matrix orthogonal_complement(const Matrix& q);

/// [Q | orthogonal_complement(Q)], a square orthogonal matrix.
Matrix complete_orthonormal_basis(const Matrix& q);

}  // namespace landscape
