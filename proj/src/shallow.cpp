#include "landscape/shallow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "landscape/error.hpp"

namespace landscape {
namespace {

Matrix diagonal_block(const Matrix& t, std::size_t begin, std::size_t size) {
  return t.block(begin, begin, size, size);
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

BlockSpectrum BlockSpectrum::from_sorted(std::span<const double> sorted_desc, double rel_tol) {
  for (std::size_t i = 0; i < sorted_desc.size(); ++i) {
    if (!std::isfinite(sorted_desc[i]) || sorted_desc[i] < 0.0) {
      throw PreconditionError("block spectrum needs finite non-negative values");
    }
    if (i > 0 && sorted_desc[i] > sorted_desc[i - 1]) {
      throw PreconditionError("block spectrum needs a non-increasing list");
    }
  }
  BlockSpectrum out;
  for (const IndexBlock& b : group_equal_values(sorted_desc, rel_tol)) {
    double sum = 0.0;
    for (std::size_t i = b.begin; i < b.end; ++i) sum += sorted_desc[i];
    out.values.push_back(sum / static_cast<double>(b.size()));
    out.multiplicities.push_back(b.size());
  }
  return out;
}

std::size_t BlockSpectrum::total() const noexcept {
  return std::accumulate(multiplicities.begin(), multiplicities.end(), std::size_t{0});
}

std::size_t BlockSpectrum::offset(std::size_t i) const {
  if (i > multiplicities.size()) throw DimensionError("block index out of range");
  return std::accumulate(multiplicities.begin(), multiplicities.begin() + static_cast<std::ptrdiff_t>(i),
                         std::size_t{0});
}

bool BlockSpectrum::is_zero_block(std::size_t i) const {
  const double top = values.empty() ? 0.0 : values.front();
  return values.at(i) <= kGroupingTol * top || top == 0.0;
}

Matrix ReducedProblem::to_reduced(const Matrix& r) const {
  if (r.rows() != U2.rows() || r.cols() != U1.rows()) {
    throw DimensionError("to_reduced: R must be " + std::to_string(U2.rows()) + "x" +
                         std::to_string(U1.rows()));
  }
  return transpose_times(U2, r * U1 * Sigma1 * V2);
}

Matrix ReducedProblem::from_reduced(const Matrix& t) const {
  require_same_shape(t, Sigma2, "from_reduced");
  Matrix inv_sigma1 = Sigma1;
  for (std::size_t i = 0; i < inv_sigma1.rows(); ++i) inv_sigma1(i, i) = 1.0 / Sigma1(i, i);
  return times_transpose(U2 * times_transpose(t, V2) * inv_sigma1, U1);
}

double ReducedProblem::value(const Matrix& t) const {
  require_same_shape(t, Sigma2, "reduced value");
  return 0.5 * frobenius_distance_squared(t, Sigma2);
}

Matrix ReducedProblem::square_target() const {
  const std::size_t q = std::max(Sigma2.rows(), Sigma2.cols());
  Matrix out(q, q);
  out.set_block(0, 0, Sigma2);
  return out;
}

BlockSpectrum ReducedProblem::spectrum() const {
  const Matrix sq = square_target();
  std::vector<double> diag(sq.rows());
  for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = sq(i, i);
  return BlockSpectrum::from_sorted(diag);
}

std::size_t RankAllocation::total() const noexcept {
  return std::accumulate(ranks.begin(), ranks.end(), std::size_t{0});
}

double shallow_loss(const Matrix& r, const Dataset& data) {
  if (r.rows() != data.Y().rows() || r.cols() != data.X().rows()) {
    throw DimensionError("shallow_loss: R must be " + std::to_string(data.Y().rows()) + "x" +
                         std::to_string(data.X().rows()));
  }
  return 0.5 * frobenius_distance_squared(r * data.X(), data.Y());
}

ReducedProblem reduce_to_diagonal(const Dataset& data, const Matrix* r) {
  const Matrix& x = data.X();
  const Matrix& y = data.Y();
  const std::size_t d0 = x.rows();
  const std::size_t dh = y.rows();

  const SvdTriple xs = svd(x);
  if (!(xs.S.back() > kDefaultRankTol * xs.S.front())) {
    throw PreconditionError("reduce_to_diagonal: X is not full row rank");
  }
  ReducedProblem p;
  p.U1 = xs.U;
  p.Sigma1 = Matrix::diagonal(xs.S);
  p.V1 = xs.V;

  const Matrix yhat = y * p.V1;
  const SvdTriple ys = svd(yhat);
  p.U2 = complete_orthonormal_basis(ys.U);
  p.V2 = complete_orthonormal_basis(ys.V);
  p.Sigma2 = Matrix::diagonal(dh, d0, ys.S);
  p.constant = 0.5 * frobenius_distance_squared(y, times_transpose(yhat, p.V1));

  if (r != nullptr) p.reduced_target = p.to_reduced(*r);
  return p;
}

RankAllocation rank_allocation(const BlockSpectrum& spectrum, std::size_t k) {
  RankAllocation alloc;
  alloc.ranks.assign(spectrum.block_count(), 0);
  std::size_t remaining = k;
  for (std::size_t i = 0; i < spectrum.block_count() && remaining > 0; ++i) {
    if (spectrum.is_zero_block(i)) break;
    alloc.ranks[i] = std::min(spectrum.multiplicities[i], remaining);
    remaining -= alloc.ranks[i];
  }
  return alloc;
}

double global_min_value(const BlockSpectrum& spectrum, std::size_t k) {
  const RankAllocation alloc = rank_allocation(spectrum, k);
  double v = 0.0;
  for (std::size_t i = 0; i < spectrum.block_count(); ++i) {
    v += static_cast<double>(spectrum.multiplicities[i] - alloc.ranks[i]) * spectrum.values[i] *
         spectrum.values[i];
  }
  return 0.5 * v;
}

Matrix global_minimizer(const Dataset& data, std::size_t k) {
  const std::size_t cap = std::min(data.X().rows(), data.Y().rows());
  if (k > cap) {
    throw PreconditionError("global_minimizer: k = " + std::to_string(k) + " exceeds min(d_H, d_0) = " +
                            std::to_string(cap));
  }
  const ReducedProblem p = reduce_to_diagonal(data);
  Matrix t = p.Sigma2;
  for (std::size_t i = k; i < cap; ++i) t(i, i) = 0.0;
  return p.from_reduced(t);
}

BlockReport analyze_candidate(const Matrix& t, const BlockSpectrum& spectrum, double tol,
                              std::optional<std::size_t> budget) {
  const std::size_t n = spectrum.total();
  if (t.rows() != n || t.cols() != n) {
    throw DimensionError("analyze_candidate: T must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  require_finite(t, "candidate");
  const double lambda1 = spectrum.values.empty() ? 0.0 : spectrum.values.front();
  const double abs_tol = tol * std::max(1.0, lambda1);

  BlockReport rep;
  rep.is_block_diagonal = true;
  rep.is_symmetric = true;
  rep.is_projection = true;

  const std::size_t r = spectrum.block_count();
  std::vector<std::size_t> block_of(n);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t off = spectrum.offset(i);
    for (std::size_t j = 0; j < spectrum.multiplicities[i]; ++j) block_of[off + j] = i;
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (block_of[a] != block_of[b] && std::abs(t(a, b)) > abs_tol) rep.is_block_diagonal = false;
    }
  }

  rep.allocation.ranks.assign(r, 0);
  Matrix target(n, n);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t off = spectrum.offset(i);
    const std::size_t mi = spectrum.multiplicities[i];
    for (std::size_t j = 0; j < mi; ++j) target(off + j, off + j) = spectrum.values[i];
    const Matrix ti = diagonal_block(t, off, mi);
    if (max_abs_diff(ti, ti.transpose()) > abs_tol) rep.is_symmetric = false;

    double defect = 0.0;
    if (spectrum.is_zero_block(i)) {
      defect = frobenius_norm(ti);
    } else {
      const Matrix pi = ti * (1.0 / spectrum.values[i]);
      defect = frobenius_norm(pi * pi - pi);
      const std::vector<double> s = svd(pi).S;
      rep.allocation.ranks[i] =
          static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](double v) { return v > 0.5; }));
    }
    rep.projection_defect.push_back(defect);
    const double limit = (spectrum.is_zero_block(i) ? abs_tol : tol) * std::sqrt(static_cast<double>(mi));
    if (defect > limit) rep.is_projection = false;
  }

  rep.budget = budget.value_or(rep.allocation.total());
  rep.is_global = rep.allocation == rank_allocation(spectrum, rep.budget);
  rep.value = 0.5 * frobenius_distance_squared(t, target);
  rep.global_value = global_min_value(spectrum, rep.budget);
  return rep;
}

Matrix descent_path(const Matrix& tstar, const BlockSpectrum& spectrum, std::size_t i1, std::size_t i2,
                    double theta) {
  if (!(i1 < i2) || i2 >= spectrum.block_count()) {
    throw PreconditionError("descent_path: needs block indices i1 < i2 < " +
                            std::to_string(spectrum.block_count()));
  }
  if (!(theta >= 0.0 && theta <= M_PI / 2.0)) {
    throw PreconditionError("descent_path: theta must lie in [0, pi/2]");
  }
  const BlockReport rep = analyze_candidate(tstar, spectrum);
  if (!rep.is_block_diagonal || !rep.is_symmetric || !rep.is_projection) {
    throw PreconditionError("descent_path: T* does not have the block projection structure");
  }
  if (spectrum.is_zero_block(i1) || rep.allocation.ranks[i1] >= spectrum.multiplicities[i1]) {
    throw ConstructionError("descent_path: block " + std::to_string(i1) + " has no spare capacity");
  }
  if (rep.allocation.ranks[i2] == 0) {
    throw ConstructionError("descent_path: block " + std::to_string(i2) + " holds no rank to move");
  }

  const std::size_t n = spectrum.total();
  const double l1 = spectrum.values[i1];
  const double l2 = spectrum.values[i2];

  // u: a unit eigenvector of T*_{i2} with eigenvalue λ_{i2}.
  const std::size_t off2 = spectrum.offset(i2);
  const std::size_t m2 = spectrum.multiplicities[i2];
  const SvdTriple d2 = svd(diagonal_block(tstar, off2, m2) * (1.0 / l2));
  std::vector<double> u(n, 0.0);
  for (std::size_t j = 0; j < m2; ++j) u[off2 + j] = d2.U(j, 0);

  // ū: a unit vector in block i1 orthogonal to T*_{i1}'s range.
  const std::size_t off1 = spectrum.offset(i1);
  const std::size_t m1 = spectrum.multiplicities[i1];
  const SvdTriple d1 = svd(diagonal_block(tstar, off1, m1) * (1.0 / l1));
  const Matrix free_dirs = orthogonal_complement(d1.U.left_columns(rep.allocation.ranks[i1]));
  std::vector<double> ubar(n, 0.0);
  for (std::size_t j = 0; j < m1; ++j) ubar[off1 + j] = free_dirs(j, 0);

  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double weight = l1 * s * s + l2 * c * c;
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = u[j] * c + ubar[j] * s;

  Matrix out = tstar;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) out(a, b) += weight * w[a] * w[b] - l2 * u[a] * u[b];
  }
  return out;
}

std::string format_report(const RankAllocation& alloc) {
  std::ostringstream os;
  os << "ranks: " << join(alloc.ranks) << '\n' << "total_rank: " << alloc.total() << '\n';
  return os.str();
}

std::string format_report(const BlockReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "is_block_diagonal: " << (report.is_block_diagonal ? "true" : "false") << '\n'
     << "is_symmetric: " << (report.is_symmetric ? "true" : "false") << '\n'
     << "is_projection: " << (report.is_projection ? "true" : "false") << '\n'
     << "projection_defect: ";
  for (std::size_t i = 0; i < report.projection_defect.size(); ++i) {
    if (i) os << ',';
    os << report.projection_defect[i];
  }
  os << '\n' << format_report(report.allocation) << "budget: " << report.budget << '\n'
     << "is_global: " << (report.is_global ? "true" : "false") << '\n'
     << "value: " << report.value << '\n'
     << "global_value: " << report.global_value << '\n';
  return os.str();
}

}  // namespace landscape
