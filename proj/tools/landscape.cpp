// landscape: command-line driver for the deep-linear-network toolkit.

#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "landscape/error.hpp"
#include "landscape/report.hpp"

using namespace landscape;

namespace {

void add_common(CLI::App* cmd, cli::Common& c) {
  cmd->add_option("--out", c.out, "Report destination, '-' for standard output")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed (LANDSCAPE_SEED overrides)")->capture_default_str();
  cmd->add_option("--parallel", c.parallel, "Trial worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep linear network loss-landscape toolkit"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  cli::Common common;
  int status = 0;

  cli::GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a dataset and initial weights");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--dims", gen.dims, "Comma-separated widths d_0,...,d_H")->required();
  gen_cmd->add_option("--samples", gen.samples, "Sample count m")->required();

  cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Run gradient descent and save the final weights");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", train.data, "Dataset directory (X.txt, Y.txt)")->required();
  train_cmd->add_option("--init", train.init, "Initial weights directory (default DATA/weights)");
  train_cmd->add_option("--save", train.save, "Directory for the final weights")->required();
  train_cmd->add_option("--trajectory", train.trajectory, "Trajectory CSV (default SAVE/trajectory.csv)");
  train_cmd->add_option("--step-policy", train.step_policy, "fixed or backtracking")->capture_default_str();
  train_cmd->add_option("--step-size", train.step_size)->capture_default_str();
  train_cmd->add_option("--max-iters", train.max_iters)->capture_default_str();
  train_cmd->add_option("--grad-tol", train.grad_tol, "Relative to 1 + |Y|_F")->capture_default_str();
  train_cmd->add_option("--loss-gap-tol", train.loss_gap_tol)->capture_default_str();
  train_cmd->add_option("--hessian-tol", train.hessian_tol)->capture_default_str();

  cli::AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Classify a weight stack as a critical point");
  add_common(analyze_cmd, common);
  analyze_cmd->add_option("--data", analyze.data, "Dataset directory")->required();
  analyze_cmd->add_option("--weights", analyze.weights, "Weights directory (default DATA/weights)");
  analyze_cmd->add_option("--grad-tol", analyze.grad_tol)->capture_default_str();
  analyze_cmd->add_option("--loss-gap-tol", analyze.loss_gap_tol)->capture_default_str();
  analyze_cmd->add_option("--hessian-tol", analyze.hessian_tol)->capture_default_str();

  cli::PerturbOptions perturb;
  auto* perturb_cmd = app.add_subcommand("perturb", "Loss-preserving repairs and product factorization");
  perturb_cmd->require_subcommand(1);
  auto* repair_cmd = perturb_cmd->add_subcommand("repair", "Make one layer full rank");
  auto* sweep_cmd = perturb_cmd->add_subcommand("sweep", "Make every layer and partial product full rank");
  auto* factor_cmd = perturb_cmd->add_subcommand("factor", "Factor a perturbed product near given weights");
  for (CLI::App* cmd : {repair_cmd, sweep_cmd, factor_cmd}) {
    add_common(cmd, common);
    cmd->add_option("--save", perturb.save, "Directory for the resulting weights");
  }
  for (CLI::App* cmd : {repair_cmd, sweep_cmd}) {
    cmd->add_option("--data", perturb.data, "Dataset directory")->required();
    cmd->add_option("--weights", perturb.weights, "Weights directory (default DATA/weights)");
    cmd->add_option("--delta", perturb.delta, "Entrywise displacement budget")->capture_default_str();
    cmd->add_option("--mu", perturb.mu, "First step along the repair direction")->capture_default_str();
  }
  repair_cmd->add_option("--layer", perturb.layer, "Layer to repair, 1-based")->capture_default_str();
  factor_cmd->add_option("--weights", perturb.weights, "Reference weights directory")->required();
  factor_cmd->add_option("--target", perturb.target, "Matrix file holding the perturbed product")->required();

  cli::VerifyOptions verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the landscape checks and report pass/fail");
  add_common(verify_cmd, common);
  verify_cmd->add_option("--theorem", verify.theorem, "1 witness at a minimum, 2 shallow closed form, 3 descent experiment, or all")->capture_default_str();
  verify_cmd->add_option("--dims", verify.dims)->capture_default_str();
  verify_cmd->add_option("--samples", verify.samples)->capture_default_str();
  verify_cmd->add_option("--trials", verify.trials)->capture_default_str();
  verify_cmd->add_option("--data", verify.data, "Checkpoint dataset for the witness check");
  verify_cmd->add_option("--weights", verify.weights, "Checkpoint weights for the witness check");
  verify_cmd->add_option("--delta", verify.delta)->capture_default_str();
  verify_cmd->add_option("--certificate-samples", verify.certificate_samples)->capture_default_str();
  verify_cmd->add_option("--max-iters", verify.max_iters)->capture_default_str();

  cli::CompleteOptions complete;
  auto* complete_cmd = app.add_subcommand("complete", "Masked low-rank completion experiment (empirical)");
  add_common(complete_cmd, common);
  complete_cmd->add_option("--dims", complete.dims)->capture_default_str();
  complete_cmd->add_option("--target", complete.target, "Target matrix file (planted low rank otherwise)");
  complete_cmd->add_option("--rank", complete.rank, "Rank of the planted target")->capture_default_str();
  complete_cmd->add_option("--observe", complete.observe, "Observed fraction in (0, 1]")->capture_default_str();
  complete_cmd->add_option("--trials", complete.trials)->capture_default_str();
  complete_cmd->add_option("--max-iters", complete.max_iters)->capture_default_str();
  complete_cmd->add_option("--loss-gap-tol", complete.loss_gap_tol)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    common.seed = cli::effective_seed(common.seed);
    if (*gen_cmd) status = cli::run_gen(common, gen);
    else if (*train_cmd) status = cli::run_train(common, train);
    else if (*analyze_cmd) status = cli::run_analyze(common, analyze);
    else if (*repair_cmd) status = cli::run_perturb_repair(common, perturb);
    else if (*sweep_cmd) status = cli::run_perturb_sweep(common, perturb);
    else if (*factor_cmd) status = cli::run_perturb_factor(common, perturb);
    else if (*verify_cmd) status = cli::run_verify(common, verify);
    else if (*complete_cmd) status = cli::run_complete(common, complete);
  } catch (const Error& e) {
    std::cerr << "error: " << e.name() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return status;
}
