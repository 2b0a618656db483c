#pragma once
// Experiment engine: random instances, gradient descent, critical-point
// classification, and the landscape experiments built on them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "landscape/matrix.hpp"
#include "landscape/model.hpp"

namespace landscape {

enum class StepPolicy { fixed, backtracking };

enum class Classification {
  global_min,
  saddle,
  /// Critical, above the global value, but no Hessian eigenvalue below the
  /// negative tolerance (e.g. W = 0 for depth ≥ 3, where the Hessian vanishes).
  degenerate,
  non_critical,
};

std::string to_string(StepPolicy p);
std::string to_string(Classification c);
StepPolicy parse_step_policy(const std::string& s);

struct ExperimentConfig {
  NetworkDims dims{std::vector<std::size_t>{1, 1}};
  std::size_t samples = 1;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  StepPolicy step_policy = StepPolicy::backtracking;
  /// Fixed step, or the first trial step for backtracking.
  double step_size = 0.05;
  std::size_t max_iters = 200000;
  /// Criticality threshold is grad_tol·(1 + ‖Y‖_F).
  double grad_tol = 1e-8;
  /// A critical point is a global minimum when gap ≤ loss_gap_tol·(1 + global).
  double loss_gap_tol = 1e-6;
  /// Saddle when λ_min(Hessian) < −hessian_tol·max(1, λ_max).
  double hessian_tol = 1e-6;
  /// Trial worker threads; results do not depend on it.
  std::size_t workers = 1;
  bool record_trajectory = false;

  /// PreconditionError on a non-positive tolerance, zero trials, etc.
  void validate() const;
};

struct CriticalPointReport {
  double gradient_norm = 0.0;
  double grad_threshold = 0.0;
  double hessian_min_eig = 0.0;
  double hessian_max_eig = 0.0;
  double loss = 0.0;
  double global_value = 0.0;
  double gap = 0.0;
  Classification classification = Classification::non_critical;
};

struct TrajectoryPoint {
  std::size_t iteration = 0;
  double loss = 0.0;
  double gradient_norm = 0.0;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  std::size_t iterations = 0;
  bool converged = false;
  CriticalPointReport report;
  bool reached_global = false;
  /// Iterations at which a saddle-escape nudge was applied.
  std::vector<std::size_t> nudges;
  std::vector<TrajectoryPoint> trajectory;
  WeightStack weights;
  /// Name and message of an error that ended the trial, empty otherwise.
  std::string error;
};

struct ExperimentSummary {
  ExperimentConfig config;
  std::vector<TrialResult> trials;
  std::size_t converged = 0;
  std::size_t global = 0;
  std::size_t saddle_terminated = 0;
  std::size_t nudges = 0;
  std::size_t failed = 0;  // trials that ended in an error
  double max_gap = 0.0;    // over converged trials
  /// Every converged trial is a global minimum.
  bool verified = false;
};

/// Observed entries Ω of a target Y, for the objective ½ Σ_Ω (W_H⋯W_1 − Y)².
class MaskedDataset {
 public:
  MaskedDataset(Matrix y, std::vector<std::pair<std::size_t, std::size_t>> observed, NetworkDims dims);
  /// Observes round(fraction·rows·cols) entries (at least one) chosen by the
  /// seed. PreconditionError unless fraction ∈ (0, 1].
  static MaskedDataset sample(Matrix y, NetworkDims dims, double observe_fraction, std::uint64_t seed);
  static MaskedDataset full(Matrix y, NetworkDims dims);

  const Matrix& Y() const noexcept { return y_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& observed() const noexcept { return observed_; }
  const NetworkDims& dims() const noexcept { return dims_; }
  /// 1 on Ω, 0 elsewhere.
  const Matrix& mask() const noexcept { return mask_; }
  bool is_full() const noexcept { return observed_.size() == y_.size(); }

 private:
  Matrix y_;
  std::vector<std::pair<std::size_t, std::size_t>> observed_;
  NetworkDims dims_;
  Matrix mask_;
};

struct MaskedTrial {
  std::size_t trial = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double loss = 0.0;
  double gradient_norm = 0.0;
  bool success = false;
  std::vector<std::size_t> nudges;
};

struct MaskedSummary {
  ExperimentConfig config;
  std::size_t observed = 0;
  std::size_t entries = 0;
  std::vector<MaskedTrial> trials;
  double best_value = 0.0;
  double success_fraction = 0.0;
  /// Eckart–Young value, available only when every entry is observed.
  std::optional<double> global_value;
};

/// Standard normal X (d_0 × m) and Y (d_H × m), resampled until both have full
/// row rank, and weights with N(0, 1/fan_in) entries. Deterministic in
/// (config.seed, trial).
std::pair<Dataset, WeightStack> generate_instance(const ExperimentConfig& config, std::size_t trial = 0);

/// Global value of the rank-d_p problem, ½Σ(m_i − d_{p_i})λ_i² + constant.
double deep_global_value(const Dataset& data, const NetworkDims& dims);

/// Runs the configured descent from w0. `nudge_seed` drives the
/// saddle-escape perturbations. DivergenceError if the loss exceeds 1e12 or
/// stops being finite.
TrialResult gradient_descent(const WeightStack& w0, const Dataset& data, const ExperimentConfig& config,
                             std::uint64_t nudge_seed = 0);

CriticalPointReport classify_critical_point(const WeightStack& w, const Dataset& data,
                                            const ExperimentConfig& config);

ExperimentSummary no_bad_local_minima_experiment(const ExperimentConfig& config);

/// Empirical: success is measured against the best value found by any trial.
MaskedSummary masked_completion_experiment(const ExperimentConfig& config, const MaskedDataset& masked);

/// Random rows × cols matrix of the given rank (product of Gaussian factors).
Matrix planted_low_rank(std::size_t rows, std::size_t cols, std::size_t rank, std::uint64_t seed);

}  // namespace landscape
