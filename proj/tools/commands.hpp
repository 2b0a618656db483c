#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "landscape/harness.hpp"

namespace landscape::cli {

// Flags shared by every command.
struct Common {
  std::string out = "-";
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
};

struct GenOptions {
  std::string dims;
  std::size_t samples = 0;
};

struct TrainOptions {
  std::string data;
  std::string init;  // defaults to <data>/weights
  std::string save;
  std::string trajectory;  // defaults to <save>/trajectory.csv
  std::string step_policy = "backtracking";
  double step_size = 0.05;
  std::size_t max_iters = 200000;
  double grad_tol = 1e-8;
  double loss_gap_tol = 1e-6;
  double hessian_tol = 1e-6;
};

struct AnalyzeOptions {
  std::string data;
  std::string weights;
  double grad_tol = 1e-8;
  double loss_gap_tol = 1e-6;
  double hessian_tol = 1e-6;
};

struct PerturbOptions {
  std::string data;
  std::string weights;
  std::string target;  // factor: the perturbed product R
  std::string save;
  std::size_t layer = 1;  // repair: 1-based
  double delta = 1e-3;
  double mu = 1.0;
};

struct VerifyOptions {
  std::string theorem = "all";
  std::string dims = "4,3,2,3,4";
  std::size_t samples = 10;
  std::size_t trials = 20;
  std::string data;     // witness check: optional checkpoint
  std::string weights;  // witness check: optional checkpoint
  double delta = 1e-3;
  std::size_t certificate_samples = 200;
  std::size_t max_iters = 200000;
};

struct CompleteOptions {
  std::string dims = "6,2,6";
  std::string target;  // optional Y file; planted low-rank target otherwise
  std::size_t rank = 2;
  double observe = 0.7;
  std::size_t trials = 50;
  std::size_t max_iters = 200000;
  double loss_gap_tol = 1e-6;
};

// Each returns the process exit status; reports go to Common::out.
int run_gen(const Common& c, const GenOptions& o);
int run_train(const Common& c, const TrainOptions& o);
int run_analyze(const Common& c, const AnalyzeOptions& o);
int run_perturb_repair(const Common& c, const PerturbOptions& o);
int run_perturb_sweep(const Common& c, const PerturbOptions& o);
int run_perturb_factor(const Common& c, const PerturbOptions& o);
int run_verify(const Common& c, const VerifyOptions& o);
int run_complete(const Common& c, const CompleteOptions& o);

/// LANDSCAPE_SEED when set (PreconditionError if malformed), otherwise `flag`.
std::uint64_t effective_seed(std::uint64_t flag);

}  // namespace landscape::cli
