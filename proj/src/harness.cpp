#include "landscape/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include <Eigen/Eigenvalues>

#include "landscape/error.hpp"
#include "landscape/kernels.hpp"
#include "landscape/linalg.hpp"
#include "landscape/random.hpp"
#include "landscape/shallow.hpp"

namespace landscape {
namespace {

constexpr double kDivergenceLoss = 1e12;
constexpr double kArmijo = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr std::size_t kPlateauWindow = 1000;
constexpr double kNudgeNorm = 1e-7;
// Steps whose loss change is below this (relative) are judged by the
// directional derivative instead, since the loss comparison is rounding noise.
constexpr double kLossNoise = 1e-12;
constexpr double kOvershoot = 0.8;
constexpr std::size_t kMaxProbeParams = 2000;
constexpr int kGenerationRetries = 100;

// c = a·b into a preallocated c.
void mul_into(const Matrix& a, const Matrix& b, Matrix& c) {
  kernels::gemm(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
}

// c = a·bᵀ.
void mul_abt_into(const Matrix& a, const Matrix& b, Matrix& c) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = kernels::dot(a.row(i).data(), b.row(j).data(), a.cols());
}

// c = aᵀ·b.
void mul_atb_into(const Matrix& a, const Matrix& b, Matrix& c) {
  std::fill(c.values().begin(), c.values().end(), 0.0);
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki != 0.0) kernels::axpy(aki, b.row(k).data(), c.row(i).data(), b.cols());
    }
}

// ½‖mask ⊙ (W_H⋯W_1·X − Y)‖² with preallocated forward/backward buffers.
class Objective {
 public:
  Objective(const Matrix& x, const Matrix& y, const NetworkDims& dims, const Matrix* mask)
      : x_(x), y_(y), mask_(mask) {
    const std::size_t m = x.cols();
    for (std::size_t l = 0; l <= dims.depth(); ++l) {
      acts_.emplace_back(dims.width(l), m);
      deltas_.emplace_back(dims.width(l), m);
    }
  }

  double value(const std::vector<Matrix>& w) {
    forward(w);
    return residual_energy();
  }

  double value_and_gradient(const std::vector<Matrix>& w, std::vector<Matrix>& g) {
    forward(w);
    const double f = residual_energy();
    const std::size_t h = w.size();
    for (std::size_t l = h; l-- > 0;) {
      const Matrix& input = l == 0 ? x_ : acts_[l];
      mul_abt_into(deltas_[l + 1], input, g[l]);
      if (l > 0) mul_atb_into(w[l], deltas_[l + 1], deltas_[l]);
    }
    return f;
  }

 private:
  void forward(const std::vector<Matrix>& w) {
    for (std::size_t l = 0; l < w.size(); ++l) mul_into(w[l], l == 0 ? x_ : acts_[l], acts_[l + 1]);
  }

  // Fills the top delta with the (masked) residual and returns ½‖·‖².
  double residual_energy() {
    Matrix& e = deltas_.back();
    const Matrix& out = acts_.back();
    const double* o = out.data();
    const double* y = y_.data();
    double* d = e.data();
    const std::size_t n = e.size();
    if (mask_ != nullptr) {
      const double* mk = mask_->data();
      for (std::size_t i = 0; i < n; ++i) d[i] = mk[i] * (o[i] - y[i]);
    } else {
      for (std::size_t i = 0; i < n; ++i) d[i] = o[i] - y[i];
    }
    return 0.5 * kernels::sum_squares(d, n);
  }

  const Matrix& x_;
  const Matrix& y_;
  const Matrix* mask_;
  std::vector<Matrix> acts_;
  std::vector<Matrix> deltas_;
};

double squared_norm(const std::vector<Matrix>& g) {
  double s = 0.0;
  for (const Matrix& m : g) s += frobenius_norm_squared(m);
  return s;
}

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) s += kernels::dot(a[l].data(), b[l].data(), a[l].size());
  return s;
}

struct DescentOutcome {
  std::vector<Matrix> w;
  std::size_t iterations = 0;
  bool converged = false;
  double loss = 0.0;
  double gradient_norm = 0.0;
  std::vector<std::size_t> nudges;
  std::vector<TrajectoryPoint> trajectory;
};

void check_divergence(double f, std::size_t iter) {
  if (!std::isfinite(f) || f > kDivergenceLoss) {
    throw DivergenceError("loss diverged to " + std::to_string(f) + " at iteration " + std::to_string(iter) +
                          "; reduce the step size");
  }
}

// Most negative curvature direction of the (central-difference) Hessian at w,
// unit norm, or empty when the smallest eigenvalue is above
// -hessian_tol·max(1, λ_max).
std::vector<Matrix> negative_curvature(Objective& obj, const std::vector<Matrix>& w, double hessian_tol) {
  std::size_t n = 0;
  double scale = 0.0;
  for (const Matrix& m : w) {
    n += m.size();
    scale = std::max(scale, max_abs(m));
  }
  const double h = 1e-5 * (1.0 + scale);
  std::vector<Matrix> probe = w;
  std::vector<Matrix> gp;
  std::vector<Matrix> gm;
  for (const Matrix& m : w) {
    gp.emplace_back(m.rows(), m.cols());
    gm.emplace_back(m.rows(), m.cols());
  }
  Eigen::MatrixXd hess(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    for (std::size_t i = 0; i < w[l].size(); ++i, ++col) {
      double* x = probe[l].data() + i;
      const double saved = *x;
      *x = saved + h;
      obj.value_and_gradient(probe, gp);
      *x = saved - h;
      obj.value_and_gradient(probe, gm);
      *x = saved;
      Eigen::Index row = 0;
      for (std::size_t k = 0; k < w.size(); ++k)
        for (std::size_t j = 0; j < w[k].size(); ++j, ++row)
          hess(row, col) = (gp[k].data()[j] - gm[k].data()[j]) / (2.0 * h);
    }
  }
  const Eigen::MatrixXd sym = 0.5 * (hess + hess.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) return {};
  const double lo = solver.eigenvalues()(0);
  const double hi = solver.eigenvalues()(static_cast<Eigen::Index>(n) - 1);
  if (lo >= -hessian_tol * std::max(1.0, hi)) return {};
  std::vector<Matrix> dir;
  Eigen::Index row = 0;
  for (const Matrix& m : w) {
    dir.emplace_back(m.rows(), m.cols());
    for (std::size_t j = 0; j < m.size(); ++j, ++row) dir.back().data()[j] = solver.eigenvectors()(row, 0);
  }
  return dir;
}

DescentOutcome run_descent(Objective& obj, std::vector<Matrix> w, const ExperimentConfig& config,
                           double threshold, std::uint64_t nudge_seed) {
  DescentOutcome out;
  std::vector<Matrix> g;
  std::vector<Matrix> gt;
  std::vector<Matrix> trial;
  std::size_t params = 0;
  for (const Matrix& m : w) {
    g.emplace_back(m.rows(), m.cols());
    gt.emplace_back(m.rows(), m.cols());
    trial.emplace_back(m.rows(), m.cols());
    params += m.size();
  }
  double f = obj.value_and_gradient(w, g);
  check_divergence(f, 0);
  double gsq = squared_norm(g);
  double gn = std::sqrt(gsq);
  auto record = [&](std::size_t iter) {
    if (config.record_trajectory) out.trajectory.push_back({iter, f, gn});
  };
  record(0);

  std::mt19937_64 nudge_rng = make_generator(nudge_seed, 0x9d6e);
  double eta = config.step_size;
  bool first = true;
  double window_loss = f;
  double window_grad = gn;
  std::size_t iter = 0;
  while (gn > threshold && iter < config.max_iters) {
    double ft = 0.0;
    bool have_gradient = false;
    if (config.step_policy == StepPolicy::backtracking) {
      if (!first) eta *= 2.0;
      first = false;
      bool accepted = false;
      while (eta > 0.0) {
        for (std::size_t l = 0; l < w.size(); ++l) {
          std::copy(w[l].values().begin(), w[l].values().end(), trial[l].values().begin());
          kernels::axpy(-eta, g[l].data(), trial[l].data(), g[l].size());
        }
        ft = obj.value(trial);
        if (std::isfinite(ft) && ft <= f - kArmijo * eta * gsq) {
          accepted = true;
          break;
        }
        if (std::isfinite(ft) && ft <= f + kLossNoise * (1.0 + std::abs(f))) {
          // Loss difference is unresolvable: accept while the slope along
          // -g has not reversed by more than the overshoot bound.
          ft = obj.value_and_gradient(trial, gt);
          if (inner(gt, g) >= -kOvershoot * gsq) {
            accepted = true;
            have_gradient = true;
            break;
          }
        }
        eta *= kBacktrack;
      }
      if (!accepted) break;  // step underflow: no representable descent step left
    } else {
      for (std::size_t l = 0; l < w.size(); ++l) {
        std::copy(w[l].values().begin(), w[l].values().end(), trial[l].values().begin());
        kernels::axpy(-eta, g[l].data(), trial[l].data(), g[l].size());
      }
      ft = obj.value(trial);
      check_divergence(ft, iter + 1);
    }
    std::swap(w, trial);
    ++iter;
    if (have_gradient) {
      std::swap(g, gt);
      f = ft;
    } else {
      f = obj.value_and_gradient(w, g);
    }
    check_divergence(f, iter);
    gsq = squared_norm(g);
    gn = std::sqrt(gsq);
    record(iter);

    if (iter % kPlateauWindow == 0) {
      const bool flat = window_loss - f <= 1e-9 * (1.0 + f);
      const bool slow = gn > 0.5 * window_grad;
      if (flat && slow && gn > threshold) {
        // Nudge only off genuine saddles; near a minimum a kick just undoes
        // progress. Above the probe size, fall back to a random direction.
        std::vector<Matrix> dir;
        if (params <= kMaxProbeParams) {
          dir = negative_curvature(obj, w, config.hessian_tol);
        } else {
          for (const Matrix& m : w) dir.push_back(gaussian_matrix(m.rows(), m.cols(), nudge_rng));
        }
        if (!dir.empty()) {
          const double sign = std::bernoulli_distribution(0.5)(nudge_rng) ? 1.0 : -1.0;
          const double scale = sign * kNudgeNorm / std::sqrt(squared_norm(dir));
          for (std::size_t l = 0; l < w.size(); ++l) kernels::axpy(scale, dir[l].data(), w[l].data(), w[l].size());
          out.nudges.push_back(iter);
        }
        f = obj.value_and_gradient(w, g);
        gsq = squared_norm(g);
        gn = std::sqrt(gsq);
      }
      window_loss = f;
      window_grad = gn;
    }
  }
  out.w = std::move(w);
  out.iterations = iter;
  out.converged = gn <= threshold;
  out.loss = f;
  out.gradient_norm = gn;
  return out;
}

template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

std::uint64_t trial_nudge_seed(std::uint64_t seed, std::size_t trial) {
  std::uint64_t state = seed + 0x51ed2701ULL * (trial + 1);
  return splitmix64(state);
}

WeightStack random_weights(const NetworkDims& dims, std::mt19937_64& rng) {
  std::vector<Matrix> layers;
  for (std::size_t l = 0; l < dims.depth(); ++l) {
    layers.push_back(gaussian_matrix(dims.width(l + 1), dims.width(l), rng,
                                     1.0 / std::sqrt(static_cast<double>(dims.width(l)))));
  }
  return WeightStack(std::move(layers));
}

}  // namespace

std::string to_string(StepPolicy p) { return p == StepPolicy::fixed ? "fixed" : "backtracking"; }

std::string to_string(Classification c) {
  switch (c) {
    case Classification::global_min: return "global-min";
    case Classification::saddle: return "saddle";
    case Classification::degenerate: return "degenerate";
    case Classification::non_critical: return "non-critical";
  }
  return "unknown";
}

StepPolicy parse_step_policy(const std::string& s) {
  if (s == "fixed") return StepPolicy::fixed;
  if (s == "backtracking") return StepPolicy::backtracking;
  throw PreconditionError("unknown step policy '" + s + "' (expected fixed or backtracking)");
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw PreconditionError("trials must be at least 1");
  if (!(grad_tol > 0.0)) throw PreconditionError("grad_tol must be positive");
  if (!(loss_gap_tol > 0.0)) throw PreconditionError("loss_gap_tol must be positive");
  if (!(hessian_tol > 0.0)) throw PreconditionError("hessian_tol must be positive");
  if (!(step_size > 0.0) || !std::isfinite(step_size)) throw PreconditionError("step size must be positive");
  if (max_iters < 1) throw PreconditionError("max_iters must be at least 1");
}

MaskedDataset::MaskedDataset(Matrix y, std::vector<std::pair<std::size_t, std::size_t>> observed,
                             NetworkDims dims)
    : y_(std::move(y)), observed_(std::move(observed)), dims_(std::move(dims)) {
  require_finite(y_, "masked target");
  if (y_.rows() != dims_.output_width() || y_.cols() != dims_.input_width()) {
    throw DimensionError("masked target must be d_H x d_0 = " + std::to_string(dims_.output_width()) + "x" +
                         std::to_string(dims_.input_width()));
  }
  if (observed_.empty()) throw PreconditionError("observed set must be non-empty");
  std::sort(observed_.begin(), observed_.end());
  observed_.erase(std::unique(observed_.begin(), observed_.end()), observed_.end());
  mask_ = Matrix(y_.rows(), y_.cols());
  for (const auto& [r, c] : observed_) {
    if (r >= y_.rows() || c >= y_.cols()) throw DimensionError("observed position out of range");
    mask_(r, c) = 1.0;
  }
}

MaskedDataset MaskedDataset::sample(Matrix y, NetworkDims dims, double observe_fraction, std::uint64_t seed) {
  if (!(observe_fraction > 0.0 && observe_fraction <= 1.0)) {
    throw PreconditionError("observe fraction must lie in (0, 1]");
  }
  const std::size_t total = y.size();
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(observe_fraction * static_cast<double>(total))));
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng = make_generator(seed, 0x3a5c);
  // Explicit Fisher–Yates so the mask does not depend on the library's shuffle.
  for (std::size_t i = total; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  std::vector<std::pair<std::size_t, std::size_t>> observed;
  for (std::size_t k = 0; k < std::min(count, total); ++k) observed.emplace_back(idx[k] / y.cols(), idx[k] % y.cols());
  return MaskedDataset(std::move(y), std::move(observed), std::move(dims));
}

MaskedDataset MaskedDataset::full(Matrix y, NetworkDims dims) {
  std::vector<std::pair<std::size_t, std::size_t>> observed;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) observed.emplace_back(r, c);
  return MaskedDataset(std::move(y), std::move(observed), std::move(dims));
}

std::pair<Dataset, WeightStack> generate_instance(const ExperimentConfig& config, std::size_t trial) {
  const NetworkDims& dims = config.dims;
  const std::size_t m = config.samples;
  if (m < std::max(dims.input_width(), dims.output_width())) {
    throw PreconditionError("samples m = " + std::to_string(m) + " must be at least max(d_0, d_H) = " +
                            std::to_string(std::max(dims.input_width(), dims.output_width())));
  }
  std::mt19937_64 rng = make_generator(config.seed, trial);
  for (int attempt = 0; attempt < kGenerationRetries; ++attempt) {
    Matrix x = gaussian_matrix(dims.input_width(), m, rng);
    Matrix y = gaussian_matrix(dims.output_width(), m, rng);
    try {
      Dataset data(std::move(x), std::move(y));
      return {std::move(data), random_weights(dims, rng)};
    } catch (const PreconditionError&) {
      // rank-deficient draw; resample
    }
  }
  throw GenerationError("could not draw full-row-rank X and Y");
}

double deep_global_value(const Dataset& data, const NetworkDims& dims) {
  const ReducedProblem p = reduce_to_diagonal(data);
  return global_min_value(p.spectrum(), dims.bottleneck_width()) + p.constant;
}

CriticalPointReport classify_critical_point(const WeightStack& w, const Dataset& data,
                                            const ExperimentConfig& config) {
  require_conforming(w, data);
  CriticalPointReport rep;
  rep.gradient_norm = gradient_norm(gradient(w, data));
  rep.grad_threshold = config.grad_tol * (1.0 + frobenius_norm(data.Y()));
  const std::vector<double> eig = symmetric_eigenvalues(hessian(w, data));
  rep.hessian_min_eig = eig.front();
  rep.hessian_max_eig = eig.back();
  rep.loss = loss(w, data);
  rep.global_value = deep_global_value(data, w.dims());
  rep.gap = rep.loss - rep.global_value;

  if (rep.gradient_norm > rep.grad_threshold) {
    rep.classification = Classification::non_critical;
  } else if (rep.gap <= config.loss_gap_tol * (1.0 + rep.global_value)) {
    rep.classification = Classification::global_min;
  } else if (rep.hessian_min_eig < -config.hessian_tol * std::max(1.0, rep.hessian_max_eig)) {
    rep.classification = Classification::saddle;
  } else {
    rep.classification = Classification::degenerate;
  }
  return rep;
}

TrialResult gradient_descent(const WeightStack& w0, const Dataset& data, const ExperimentConfig& config,
                             std::uint64_t nudge_seed) {
  config.validate();
  require_conforming(w0, data);
  Objective obj(data.X(), data.Y(), w0.dims(), nullptr);
  const double threshold = config.grad_tol * (1.0 + frobenius_norm(data.Y()));
  DescentOutcome run = run_descent(obj, w0.layers(), config, threshold, nudge_seed);

  TrialResult res;
  res.iterations = run.iterations;
  res.converged = run.converged;
  res.nudges = std::move(run.nudges);
  res.trajectory = std::move(run.trajectory);
  res.weights = WeightStack(std::move(run.w));
  res.report = classify_critical_point(res.weights, data, config);
  res.reached_global = res.report.classification == Classification::global_min;
  return res;
}

ExperimentSummary no_bad_local_minima_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentSummary sum;
  sum.config = config;
  sum.trials.resize(config.trials);
  parallel_for(config.trials, config.workers, [&](std::size_t t) {
    auto [data, w0] = generate_instance(config, t);
    TrialResult res;
    try {
      res = gradient_descent(w0, data, config, trial_nudge_seed(config.seed, t));
    } catch (const Error& e) {
      res.error = e.name() + ": " + e.what();
    }
    res.seed = config.seed;
    res.trial = t;
    sum.trials[t] = std::move(res);
  });

  sum.verified = true;
  for (const TrialResult& t : sum.trials) {
    sum.nudges += t.nudges.size();
    if (!t.error.empty()) ++sum.failed;
    if (!t.converged) continue;
    ++sum.converged;
    sum.max_gap = sum.converged == 1 ? t.report.gap : std::max(sum.max_gap, t.report.gap);
    if (t.reached_global) ++sum.global;
    else sum.verified = false;
    if (t.report.classification == Classification::saddle ||
        t.report.classification == Classification::degenerate) {
      ++sum.saddle_terminated;
    }
  }
  return sum;
}

MaskedSummary masked_completion_experiment(const ExperimentConfig& config, const MaskedDataset& masked) {
  config.validate();
  if (!(masked.dims() == config.dims)) throw DimensionError("masked dataset dims differ from the config");
  MaskedSummary sum;
  sum.config = config;
  sum.observed = masked.observed().size();
  sum.entries = masked.Y().size();
  sum.trials.resize(config.trials);

  const Matrix x = Matrix::identity(masked.dims().input_width());
  const double threshold = config.grad_tol * (1.0 + frobenius_norm(masked.Y()));
  parallel_for(config.trials, config.workers, [&](std::size_t t) {
    std::mt19937_64 rng = make_generator(config.seed, t);
    const WeightStack w0 = random_weights(masked.dims(), rng);
    Objective obj(x, masked.Y(), masked.dims(), &masked.mask());
    DescentOutcome run = run_descent(obj, w0.layers(), config, threshold, trial_nudge_seed(config.seed, t));
    MaskedTrial& mt = sum.trials[t];
    mt.trial = t;
    mt.iterations = run.iterations;
    mt.converged = run.converged;
    mt.loss = run.loss;
    mt.gradient_norm = run.gradient_norm;
    mt.nudges = std::move(run.nudges);
  });

  sum.best_value = sum.trials.front().loss;
  for (const MaskedTrial& t : sum.trials) sum.best_value = std::min(sum.best_value, t.loss);
  std::size_t successes = 0;
  for (MaskedTrial& t : sum.trials) {
    t.success = t.loss - sum.best_value <= config.loss_gap_tol * (1.0 + sum.best_value);
    successes += t.success ? 1 : 0;
  }
  sum.success_fraction = static_cast<double>(successes) / static_cast<double>(sum.trials.size());

  if (masked.is_full()) {
    std::vector<double> s = svd(masked.Y()).S;
    s.resize(std::max(masked.Y().rows(), masked.Y().cols()), 0.0);
    sum.global_value = global_min_value(BlockSpectrum::from_sorted(s), masked.dims().bottleneck_width());
  }
  return sum;
}

Matrix planted_low_rank(std::size_t rows, std::size_t cols, std::size_t rank, std::uint64_t seed) {
  std::mt19937_64 rng = make_generator(seed, 0x10e5);
  const Matrix a = gaussian_matrix(rows, rank, rng);
  const Matrix b = gaussian_matrix(rank, cols, rng);
  return a * b;
}

}  // namespace landscape
