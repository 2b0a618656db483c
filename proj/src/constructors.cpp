#include "landscape/constructors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "landscape/error.hpp"
#include "landscape/linalg.hpp"
#include "landscape/random.hpp"
#include "landscape/shallow.hpp"

namespace landscape {
namespace {

constexpr double kNormalEquationTol = 1e-8;
constexpr double kMuFloor = 1e-300;

std::size_t rank_above(const std::vector<double>& s, double tol = kDefaultRankTol) {
  if (s.empty() || s.front() == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](double v) { return v > tol * s.front(); }));
}

std::size_t full_rank_of(const Matrix& m) { return std::min(m.rows(), m.cols()); }

bool is_full_rank(const Matrix& m) { return numerical_rank(m) == full_rank_of(m); }

std::vector<std::size_t> layer_ranks(const WeightStack& w) {
  std::vector<std::size_t> out;
  for (const Matrix& m : w.layers()) out.push_back(numerical_rank(m));
  return out;
}

double max_layer_displacement(const WeightStack& a, const WeightStack& b) {
  double d = 0.0;
  for (std::size_t l = 0; l < a.depth(); ++l) d = std::max(d, max_abs_diff(a.layer(l), b.layer(l)));
  return d;
}

RepairResult make_result(const WeightStack& before, WeightStack after, const Dataset& data,
                         double loss_before) {
  const double displacement = max_layer_displacement(before, after);
  const double loss_after = loss(after, data);
  const std::size_t rank = numerical_rank(product(after));
  std::vector<std::size_t> ranks = layer_ranks(after);
  return RepairResult{std::move(after), displacement, loss_before, loss_after, rank, std::move(ranks)};
}

// Ĉ agrees with c on the leading sb × sa block and has full rank. The leading
// block is rotated to its singular basis; its deficient rows and columns are
// then paired with rows ≥ sb and columns ≥ sa (which the loss does not see)
// by a greedy maximum matching that never touches the leading block.
Matrix complete_to_full_rank(const Matrix& c, std::size_t sb, std::size_t sa) {
  const std::size_t nr = c.rows();
  const std::size_t nc = c.cols();
  const Matrix c11 = c.block(0, 0, sb, sa);

  std::size_t cr = 0;
  Matrix pf = Matrix::identity(sb);
  Matrix qf = Matrix::identity(sa);
  if (sb > 0 && sa > 0) {
    const SvdTriple d = svd(c11);
    cr = rank_above(d.S);
    pf = complete_orthonormal_basis(d.U.left_columns(cr));
    qf = complete_orthonormal_basis(d.V.left_columns(cr));
  }

  // Ones in the rotated frame diag(Pfᵀ, I)·Ĉ·diag(Qf, I).
  Matrix ones(nr, nc);
  std::size_t placed = 0;
  std::size_t r1 = cr, r2 = sb, c1 = cr, c2 = sa;
  for (; r1 < sb && c2 < nc; ++r1, ++c2, ++placed) ones(r1, c2) = 1.0;
  for (; r2 < nr && c1 < sa; ++r2, ++c1, ++placed) ones(r2, c1) = 1.0;
  for (; r2 < nr && c2 < nc; ++r2, ++c2, ++placed) ones(r2, c2) = 1.0;
  if (cr + placed < std::min(nr, nc)) {
    throw PreconditionError(
        "full-rank repair impossible: the layer is pinned by the rest of the network (rank hypothesis "
        "on V2^T Y V1 fails)");
  }

  Matrix left = Matrix::identity(nr);
  left.set_block(0, 0, pf);
  Matrix right = Matrix::identity(nc);
  right.set_block(0, 0, qf);
  Matrix out = left * times_transpose(ones, right);
  out.set_block(0, 0, c11);
  return out;
}

// Repairs layer l of `w` and returns only the new layer.
Matrix repair_layer(const WeightStack& w, std::size_t l, const Dataset& data,
                    const PerturbationBudget& budget) {
  const std::size_t h = w.depth();
  const Matrix& wl = w.layer(l);
  const Matrix b = partial_product(w, l + 1, static_cast<std::ptrdiff_t>(h) - 1);
  const Matrix a = partial_product(w, 0, static_cast<std::ptrdiff_t>(l) - 1) * data.X();

  const Matrix btb = transpose_times(b, b);
  const Matrix aat = times_transpose(a, a);
  const Matrix rhs = transpose_times(b, times_transpose(data.Y(), a));
  const double scale = frobenius_norm(btb) * frobenius_norm(wl) * frobenius_norm(aat) + frobenius_norm(rhs);
  const double resid = frobenius_norm(btb * wl * aat - rhs);
  if (resid > kNormalEquationTol * std::max(scale, std::numeric_limits<double>::min())) {
    throw NotLayerwiseMinimumError("layer " + std::to_string(l + 1) +
                                   " does not satisfy the normal equation (relative residual " +
                                   std::to_string(resid / scale) + ")");
  }
  if (is_full_rank(wl)) return wl;

  // The loss sees W_l only through V_bᵀ·W_l·U_a restricted to the leading
  // sb × sa block.
  const SvdTriple bs = svd(b);
  const SvdTriple as = svd(a);
  const std::size_t sb = rank_above(bs.S);
  const std::size_t sa = rank_above(as.S);
  const Matrix vb = complete_orthonormal_basis(bs.V.left_columns(sb));
  const Matrix ua = complete_orthonormal_basis(as.U.left_columns(sa));

  const Matrix c = transpose_times(vb, wl * ua);
  const Matrix target = vb * times_transpose(complete_to_full_rank(c, sb, sa), ua);
  const Matrix dir = target - wl;
  const double dir_max = max_abs(dir);

  for (double mu = budget.mu; mu >= kMuFloor; mu *= 0.5) {
    if (mu * dir_max > 0.5 * budget.delta) continue;
    Matrix cand = wl + mu * dir;
    if (is_full_rank(cand)) return cand;
  }
  throw ConstructionError("full-rank repair of layer " + std::to_string(l + 1) + ": step size underflow");
}

// Splits `target` ≈ hi·lo into new (hi, lo) factors close to the given ones.
std::pair<Matrix, Matrix> split_pair(const Matrix& hi, const Matrix& lo, const Matrix& target) {
  const std::size_t d_in = lo.cols();
  const std::size_t d_mid = lo.rows();
  const std::size_t d_out = hi.rows();
  if (d_out <= d_mid && d_out <= d_in) return {hi, two_factor_perturbation(hi, lo, target)};
  if (d_in <= d_mid) return {two_factor_perturbation_left(hi, lo, target), lo};

  // Middle width is the strict bottleneck: hi = Ū·S̄₂ and lo = S̄₁·V̄ᵀ with
  // S̄₂·S̄₁ = Σ̄. Keep S̄₁, swap V̄ for the aligned V, and absorb the aligned
  // core into hi.
  const Matrix rbar = hi * lo;
  const SvdTriple ref = svd(rbar);
  const AlignedSvd al = aligned_truncated_svd(rbar, target, d_mid);
  const Matrix s2 = transpose_times(ref.U.left_columns(d_mid), hi);
  const Matrix s1 = lo * ref.V.left_columns(d_mid);
  Matrix core_scaled = al.core;
  for (std::size_t r = 0; r < d_mid; ++r)
    for (std::size_t k = 0; k < d_mid; ++k) core_scaled(r, k) /= ref.S[k];
  return {al.U * core_scaled * s2, times_transpose(s1, al.V)};
}

std::vector<Matrix> factor_layers(const std::vector<Matrix>& wbar, const Matrix& r) {
  const std::size_t h = wbar.size();
  if (h == 1) return {r};
  if (h == 2) {
    auto [hi, lo] = split_pair(wbar[1], wbar[0], r);
    return {std::move(lo), std::move(hi)};
  }
  const std::size_t p = WeightStack(wbar).dims().bottleneck_index();
  const std::size_t lo_idx = p >= 2 ? p - 2 : p;
  const std::size_t hi_idx = lo_idx + 1;

  std::vector<Matrix> merged;
  for (std::size_t l = 0; l < h; ++l) {
    if (l == hi_idx) continue;
    merged.push_back(l == lo_idx ? wbar[hi_idx] * wbar[lo_idx] : wbar[l]);
  }
  std::vector<Matrix> sub = factor_layers(merged, r);
  auto [hi, lo] = split_pair(wbar[hi_idx], wbar[lo_idx], sub[lo_idx]);

  std::vector<Matrix> out;
  for (std::size_t l = 0; l < h; ++l) {
    if (l < lo_idx) out.push_back(sub[l]);
    else if (l == lo_idx) out.push_back(lo);
    else if (l == hi_idx) out.push_back(hi);
    else out.push_back(sub[l - 1]);
  }
  return out;
}

// Entrywise bound on ‖P·Δ‖_∞ (or ‖Δ·P‖_∞) per unit ‖Δ‖_∞.
double amplification(const Matrix& pinv, std::size_t inner) {
  return std::max(1.0, static_cast<double>(inner) * max_abs(pinv));
}

}  // namespace

PerturbationBudget::PerturbationBudget(double delta_, double mu_) : delta(delta_), mu(mu_) {
  if (!(std::isfinite(delta) && delta > 0.0)) throw PreconditionError("budget delta must be finite and positive");
  if (!(std::isfinite(mu) && mu > 0.0)) throw PreconditionError("budget mu must be finite and positive");
}

RepairResult full_rank_perturbation(const WeightStack& w, std::size_t l, const Dataset& data,
                                    const PerturbationBudget& budget) {
  require_conforming(w, data);
  if (l >= w.depth()) throw DimensionError("layer index " + std::to_string(l) + " out of range");
  const double before = loss(w, data);
  Matrix repaired = repair_layer(w, l, data, budget);
  return make_result(w, w.with_layer(l, std::move(repaired)), data, before);
}

RepairResult rank_restoring_sweep(const WeightStack& w, const Dataset& data,
                                  const PerturbationBudget& budget) {
  require_conforming(w, data);
  const double grad = gradient_norm(gradient(w, data));
  const double grad_limit = 1e-8 * (1.0 + frobenius_norm(data.Y()));
  if (grad > grad_limit) {
    throw PreconditionError("rank_restoring_sweep: not a critical point (gradient norm " +
                            std::to_string(grad) + ")");
  }
  const NetworkDims dims = w.dims();
  const std::size_t p = dims.bottleneck_index();
  const std::size_t dp = dims.bottleneck_width();
  const std::size_t h = w.depth();
  const double before = loss(w, data);

  const ReducedProblem reduced = reduce_to_diagonal(data);
  if (numerical_rank(reduced.Sigma2) < dp) {
    throw PreconditionError("rank_restoring_sweep: Y V1 has rank below the bottleneck width, so no "
                            "minimum has product rank d_p");
  }

  // Every layer full rank, each within delta / 2.
  WeightStack cur = w;
  for (std::size_t l = 0; l < h; ++l) cur = cur.with_layer(l, repair_layer(cur, l, data, budget));

  // Partial products below the bottleneck, W_{p-1}⋯W_l, from l = p − 2 down.
  for (std::size_t l = p > 0 ? p - 1 : 0; l-- > 0;) {
    const Matrix upper = partial_product(cur, l + 1, static_cast<std::ptrdiff_t>(p) - 1);
    const Matrix t = upper * cur.layer(l);
    if (is_full_rank(t)) continue;
    std::vector<Matrix> merged(cur.layers().begin(), cur.layers().begin() + static_cast<std::ptrdiff_t>(l));
    merged.push_back(t);
    merged.insert(merged.end(), cur.layers().begin() + static_cast<std::ptrdiff_t>(p), cur.layers().end());
    const Matrix upper_pinv = pseudo_inverse(upper);
    const PerturbationBudget inner(budget.delta / amplification(upper_pinv, upper.rows()), budget.mu);
    const Matrix that = repair_layer(WeightStack(merged), l, data, inner);
    cur = cur.with_layer(l, two_factor_perturbation(upper, cur.layer(l), that));
  }

  // Partial products above the bottleneck, W_l⋯W_p, from l = p + 1 up.
  for (std::size_t l = p + 1; l < h; ++l) {
    const Matrix lower = partial_product(cur, p, static_cast<std::ptrdiff_t>(l) - 1);
    const Matrix t = cur.layer(l) * lower;
    if (is_full_rank(t)) continue;
    std::vector<Matrix> merged(cur.layers().begin(), cur.layers().begin() + static_cast<std::ptrdiff_t>(p));
    merged.push_back(t);
    merged.insert(merged.end(), cur.layers().begin() + static_cast<std::ptrdiff_t>(l) + 1, cur.layers().end());
    const Matrix lower_pinv = pseudo_inverse(lower);
    const PerturbationBudget inner(budget.delta / amplification(lower_pinv, lower.cols()), budget.mu);
    const Matrix that = repair_layer(WeightStack(merged), p, data, inner);
    cur = cur.with_layer(l, two_factor_perturbation_left(cur.layer(l), lower, that));
  }

  RepairResult res = make_result(w, std::move(cur), data, before);
  if (res.product_rank != dp) {
    throw ConstructionError("rank_restoring_sweep: product rank " + std::to_string(res.product_rank) +
                            " after repair, expected " + std::to_string(dp) +
                            " (loss-preserving moves cannot change the end-to-end map)");
  }
  return res;
}

Matrix two_factor_perturbation(const Matrix& a, const Matrix& b, const Matrix& rbar) {
  if (a.cols() != b.rows() || rbar.rows() != a.rows() || rbar.cols() != b.cols()) {
    throw DimensionError("two_factor_perturbation: shapes do not conform");
  }
  if (numerical_rank(a) != a.rows()) throw PreconditionError("two_factor_perturbation: A lacks full row rank");
  return b + pseudo_inverse(a) * (rbar - a * b);
}

Matrix two_factor_perturbation_left(const Matrix& a, const Matrix& b, const Matrix& rbar) {
  if (a.cols() != b.rows() || rbar.rows() != a.rows() || rbar.cols() != b.cols()) {
    throw DimensionError("two_factor_perturbation_left: shapes do not conform");
  }
  if (numerical_rank(b) != b.cols()) {
    throw PreconditionError("two_factor_perturbation_left: B lacks full column rank");
  }
  return a + (rbar - a * b) * pseudo_inverse(b);
}

WeightStack factor_perturbed_product(const WeightStack& wbar, const Matrix& r) {
  const NetworkDims dims = wbar.dims();
  if (r.rows() != dims.output_width() || r.cols() != dims.input_width()) {
    throw DimensionError("factor_perturbed_product: R must be " + std::to_string(dims.output_width()) + "x" +
                         std::to_string(dims.input_width()));
  }
  require_finite(r, "target product");
  const std::size_t dp = dims.bottleneck_width();
  if (numerical_rank(product(wbar)) != dp) {
    throw PreconditionError("factor_perturbed_product: product of the reference stack has rank below d_p");
  }
  if (numerical_rank(r) > dp) throw PreconditionError("factor_perturbed_product: rank(R) exceeds d_p");
  return WeightStack(factor_layers(wbar.layers(), r));
}

WitnessResult deep_to_shallow_witness(const WeightStack& w, const Dataset& data,
                                      const PerturbationBudget& budget, const WitnessOptions& options) {
  require_conforming(w, data);
  const double grad = gradient_norm(gradient(w, data));
  if (grad > 1e-8 * (1.0 + frobenius_norm(data.Y()))) {
    throw PreconditionError("deep_to_shallow_witness: not a minimum (gradient norm " + std::to_string(grad) + ")");
  }
  const std::vector<double> eig = symmetric_eigenvalues(hessian(w, data));
  if (eig.front() < -1e-6 * std::max(eig.back(), 0.0)) {
    throw PreconditionError("deep_to_shallow_witness: not a minimum (Hessian eigenvalue " +
                            std::to_string(eig.front()) + ")");
  }

  RepairResult sweep = rank_restoring_sweep(w, data, budget);
  Matrix r_hat = product(sweep.repaired);
  const double value = shallow_loss(r_hat, data);
  WitnessResult out{std::move(r_hat), sweep.product_rank, loss(w, data), value, std::move(sweep)};

  // Sample the rank-d_p variety around R̂ through its balanced factors.
  const std::size_t dp = w.dims().bottleneck_width();
  const SvdTriple d = svd(out.r_hat);
  Matrix left(out.r_hat.rows(), dp);
  Matrix right(dp, out.r_hat.cols());
  for (std::size_t k = 0; k < dp; ++k) {
    const double s = std::sqrt(d.S[k]);
    for (std::size_t r = 0; r < left.rows(); ++r) left(r, k) = d.U(r, k) * s;
    for (std::size_t c = 0; c < right.cols(); ++c) right(k, c) = d.V(c, k) * s;
  }
  const double radius = options.radius > 0.0 ? options.radius : budget.delta;
  const double tol = 1e-9 * (1.0 + out.shallow_loss);
  std::mt19937_64 rng = make_generator(options.seed, 0x5eed);
  out.min_sampled_change = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < options.samples; ++s) {
    Matrix g1 = gaussian_matrix(left.rows(), left.cols(), rng);
    Matrix g2 = gaussian_matrix(right.rows(), right.cols(), rng);
    const double norm = std::sqrt(frobenius_norm_squared(g1) + frobenius_norm_squared(g2));
    g1 *= radius / norm;
    g2 *= radius / norm;
    const double change = shallow_loss((left + g1) * (right + g2), data) - out.shallow_loss;
    out.min_sampled_change = std::min(out.min_sampled_change, change);
    ++out.samples;
    if (change < -tol) {
      throw CertificationError("deep_to_shallow_witness: sampled rank-d_p perturbation lowers the loss by " +
                               std::to_string(-change));
    }
  }
  if (options.samples == 0) out.min_sampled_change = 0.0;
  return out;
}

}  // namespace landscape
