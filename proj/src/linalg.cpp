#include "landscape/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "landscape/error.hpp"
#include "landscape/kernels.hpp"

namespace landscape {
namespace {

constexpr int kMaxSweeps = 80;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double row_norm(const Matrix& m, std::size_t r) {
  return std::sqrt(kernels::sum_squares(m.row(r).data(), m.cols()));
}

// Orthogonalizes `v` against rows [0, count) of `basis` (rows are unit
// vectors), twice, and returns the remaining norm.
double orthogonalize_against_rows(std::span<double> v, const Matrix& basis, std::size_t count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t r = 0; r < count; ++r) {
      const double proj = kernels::dot(basis.row(r).data(), v.data(), v.size());
      kernels::axpy(-proj, basis.row(r).data(), v.data(), v.size());
    }
  }
  return std::sqrt(kernels::sum_squares(v.data(), v.size()));
}

// Fills row `slot` of `basis` (rows [0, slot) already orthonormal) with the
// coordinate vector whose residual against the existing rows is largest.
void complete_row(Matrix& basis, std::size_t slot) {
  const std::size_t n = basis.cols();
  std::vector<double> best;
  double best_norm = -1.0;
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(e.begin(), e.end(), 0.0);
    e[i] = 1.0;
    const double norm = orthogonalize_against_rows(e, basis, slot);
    if (norm > best_norm + 1e-12) {
      best_norm = norm;
      best = e;
    }
  }
  for (double& v : best) v /= best_norm;
  std::copy(best.begin(), best.end(), basis.row(slot).begin());
}

// Columns of `a` (m ≥ n) are processed as rows of the transposed copy so the
// rotation kernels see contiguous memory.
SvdTriple jacobi_svd_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  SvdTriple out;
  if (n == 0) {
    out.U = Matrix(m, 0);
    out.V = Matrix(0, 0);
    return out;
  }

  const double scale = max_abs(a);
  Matrix w = a.transpose();
  if (scale > 0.0) w *= 1.0 / scale;
  Matrix vt = Matrix::identity(n);

  const double tol = 2.0 * kEps * static_cast<double>(std::max<std::size_t>(m, 1));
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double* wi = w.row(i).data();
        double* wj = w.row(j).data();
        const double alpha = kernels::sum_squares(wi, m);
        const double beta = kernels::sum_squares(wj, m);
        const double gamma = kernels::dot(wi, wj, m);
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        kernels::rotate(wi, wj, m, c, s);
        kernels::rotate(vt.row(i).data(), vt.row(j).data(), n, c, s);
      }
    }
  }
  if (!converged) {
    throw DecompositionError("Jacobi SVD did not converge in " + std::to_string(kMaxSweeps) +
                             " sweeps");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = row_norm(w, j);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Matrix ut(n, m);
  Matrix vt_sorted(n, n);
  out.S.resize(n);
  const double tiny = std::numeric_limits<double>::min() / kEps;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.S[k] = sigma[j] * scale;
    std::copy(vt.row(j).begin(), vt.row(j).end(), vt_sorted.row(k).begin());
    auto urow = ut.row(k);
    if (sigma[j] > tiny) {
      std::copy(w.row(j).begin(), w.row(j).end(), urow.begin());
      for (double& v : urow) v /= sigma[j];
      const double norm = orthogonalize_against_rows(urow, ut, k);
      if (norm > 0.5) {
        for (double& v : urow) v /= norm;
        continue;
      }
    }
    complete_row(ut, k);
  }
  out.U = ut.transpose();
  out.V = vt_sorted.transpose();
  return out;
}

}  // namespace

Matrix SvdTriple::reconstruct() const {
  Matrix us = U;
  for (std::size_t r = 0; r < us.rows(); ++r)
    for (std::size_t c = 0; c < us.cols(); ++c) us(r, c) *= S[c];
  return times_transpose(us, V);
}

SvdTriple svd(const Matrix& m) {
  require_finite(m, "svd input");
  if (m.rows() < m.cols()) {
    SvdTriple t = jacobi_svd_tall(m.transpose());
    return {std::move(t.V), std::move(t.S), std::move(t.U)};
  }
  return jacobi_svd_tall(m);
}

Matrix pseudo_inverse(const Matrix& m, double tol) {
  if (!(tol >= 0.0)) throw PreconditionError("pseudo_inverse: tol must be non-negative");
  const SvdTriple d = svd(m);
  Matrix out(m.cols(), m.rows());
  if (d.S.empty() || d.S[0] == 0.0) return out;
  const double cutoff = tol * d.S[0];
  Matrix v_scaled(d.V.rows(), d.V.cols());
  std::size_t kept = 0;
  for (std::size_t k = 0; k < d.S.size(); ++k) {
    if (d.S[k] <= cutoff || d.S[k] == 0.0) break;
    for (std::size_t r = 0; r < d.V.rows(); ++r) v_scaled(r, k) = d.V(r, k) / d.S[k];
    ++kept;
  }
  if (kept == 0) return out;
  return times_transpose(v_scaled.left_columns(kept), d.U.left_columns(kept));
}

std::size_t numerical_rank(const Matrix& m, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw PreconditionError("numerical_rank: tol must lie in (0,1)");
  const SvdTriple d = svd(m);
  if (d.S.empty() || d.S[0] == 0.0) return 0;
  const double cutoff = tol * d.S[0];
  return static_cast<std::size_t>(
      std::count_if(d.S.begin(), d.S.end(), [&](double s) { return s > cutoff; }));
}

std::vector<double> subspace_sin_angles(const Matrix& u1, const Matrix& u2) {
  if (u1.cols() != u2.cols()) {
    throw DimensionError("subspace_sin_angles: column counts differ (" +
                         std::to_string(u1.cols()) + " vs " + std::to_string(u2.cols()) + ")");
  }
  if (u1.rows() != u2.rows()) throw DimensionError("subspace_sin_angles: ambient dimensions differ");
  if (u1.cols() > u1.rows()) throw DimensionError("subspace_sin_angles: more columns than rows");
  // (I - U1 U1ᵀ) U2 has the sines as singular values; this stays accurate for
  // small angles where 1 - cos² would cancel.
  const Matrix residual = u2 - u1 * transpose_times(u1, u2);
  std::vector<double> s = svd(residual).S;
  for (double& v : s) v = std::clamp(v, 0.0, 1.0);
  std::reverse(s.begin(), s.end());
  return s;
}

WedinReport wedin_bound_check(const Matrix& mbar, const Matrix& m, std::size_t k) {
  require_same_shape(mbar, m, "wedin_bound_check");
  const std::size_t n = m.cols();
  if (m.rows() < n) throw PreconditionError("wedin_bound_check: needs rows >= cols");
  if (k < 1 || k >= n) throw PreconditionError("wedin_bound_check: needs 1 <= k < cols");

  const SvdTriple pert = svd(m);
  const SvdTriple ref = svd(mbar);

  WedinReport rep;
  double rho = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    rho = std::min(rho, pert.S[i]);
    for (std::size_t j = k; j < n; ++j) rho = std::min(rho, std::abs(pert.S[i] - ref.S[j]));
  }
  rep.rho = rho;
  if (!(rho > 0.0)) throw GapViolationError("wedin_bound_check: singular value gap rho <= 0");

  const Matrix u1 = pert.U.left_columns(k);
  const Matrix v1 = pert.V.left_columns(k);
  double sin_sq = 0.0;
  for (double s : subspace_sin_angles(u1, ref.U.left_columns(k))) sin_sq += s * s;
  for (double s : subspace_sin_angles(v1, ref.V.left_columns(k))) sin_sq += s * s;
  rep.lhs = std::sqrt(sin_sq);

  const Matrix diff = mbar - m;
  const double resid = frobenius_norm_squared(diff * v1) + frobenius_norm_squared(transpose_times(diff, u1));
  rep.rhs = std::sqrt(resid) / rho;
  rep.holds = rep.lhs <= rep.rhs + 1e-9;
  return rep;
}

std::vector<IndexBlock> group_equal_values(std::span<const double> sorted_desc, double rel_tol) {
  std::vector<IndexBlock> blocks;
  if (sorted_desc.empty()) return blocks;
  const double scale = std::abs(sorted_desc[0]);
  const double gap = rel_tol * scale;
  std::size_t begin = 0;
  for (std::size_t i = 1; i < sorted_desc.size(); ++i) {
    if (sorted_desc[begin] - sorted_desc[i] > gap) {
      blocks.push_back({begin, i});
      begin = i;
    }
  }
  blocks.push_back({begin, sorted_desc.size()});
  return blocks;
}

AlignedSvd aligned_truncated_svd(const Matrix& mbar, const Matrix& m, std::size_t rank) {
  require_same_shape(mbar, m, "aligned_truncated_svd");
  const SvdTriple ref = svd(mbar);
  const SvdTriple pert = svd(m);
  if (rank > ref.S.size()) throw PreconditionError("aligned_truncated_svd: rank exceeds min dimension");
  if (rank > 0 && !(ref.S[rank - 1] > kDefaultRankTol * ref.S[0])) {
    throw PreconditionError("aligned_truncated_svd: reference has rank below " + std::to_string(rank));
  }
  if (rank > 0 && !(pert.S[rank - 1] > 0.0)) {
    throw PreconditionError("aligned_truncated_svd: perturbation collapsed a singular value");
  }

  AlignedSvd out;
  out.values.assign(pert.S.begin(), pert.S.begin() + static_cast<std::ptrdiff_t>(rank));
  out.blocks = group_equal_values(std::span(ref.S).first(rank));
  out.U = pert.U.left_columns(rank);
  out.V = pert.V.left_columns(rank);
  out.core = Matrix(rank, rank);

  for (const IndexBlock& b : out.blocks) {
    const std::size_t q = b.size();
    const Matrix ub = out.U.block(0, b.begin, out.U.rows(), q);
    const Matrix vb = out.V.block(0, b.begin, out.V.rows(), q);
    const Matrix z = transpose_times(ub, ref.U.block(0, b.begin, ref.U.rows(), q)) +
                     transpose_times(vb, ref.V.block(0, b.begin, ref.V.rows(), q));
    const SvdTriple zd = svd(z);
    const Matrix rot = times_transpose(zd.U, zd.V);
    out.U.set_block(0, b.begin, ub * rot);
    out.V.set_block(0, b.begin, vb * rot);
    const Matrix sigma = Matrix::diagonal(std::span(out.values).subspan(b.begin, q));
    out.core.set_block(b.begin, b.begin, transpose_times(rot, sigma * rot));
  }
  return out;
}

AlignedSvd perturbed_svd_align(const Matrix& mbar, const Matrix& m) {
  const std::size_t full = std::min(mbar.rows(), mbar.cols());
  if (numerical_rank(mbar) != full) {
    throw PreconditionError("perturbed_svd_align: reference matrix is rank deficient");
  }
  return aligned_truncated_svd(mbar, m, full);
}

std::vector<double> symmetric_eigenvalues(const Matrix& sym) {
  if (sym.rows() != sym.cols()) throw DimensionError("symmetric_eigenvalues: matrix not square");
  require_finite(sym, "symmetric_eigenvalues input");
  const auto n = static_cast<Eigen::Index>(sym.rows());
  Eigen::MatrixXd e(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      e(r, c) = sym(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw DecompositionError("symmetric eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

Matrix orthogonal_complement(const Matrix& q) {
  const std::size_t m = q.rows();
  const std::size_t k = q.cols();
  if (k > m) throw DimensionError("orthogonal_complement: more columns than rows");
  Matrix basis(m, m);  // rows are basis vectors
  basis.set_block(0, 0, q.transpose());
  for (std::size_t slot = k; slot < m; ++slot) complete_row(basis, slot);
  return basis.block(k, 0, m - k, m).transpose();
}

Matrix complete_orthonormal_basis(const Matrix& q) {
  Matrix out(q.rows(), q.rows());
  out.set_block(0, 0, q);
  out.set_block(0, q.cols(), orthogonal_complement(q));
  return out;
}

}  // namespace landscape
