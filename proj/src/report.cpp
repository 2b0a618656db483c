#include "landscape/report.hpp"

#include <cmath>
#include <iomanip>

namespace landscape {
namespace {

// JSON has no infinities or NaN; report them as strings rather than null.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string tool_version() {
#ifdef LANDSCAPE_VERSION
  return LANDSCAPE_VERSION;
#else
  return "unknown";
#endif
}

nlohmann::json report_json(const RunManifest& m) {
  return {{"command", m.command},
          {"config", m.config},
          {"inputs", m.inputs},
          {"outputs", m.outputs},
          {"version", m.version},
          {"duration_seconds", m.duration_seconds}};
}

nlohmann::json report_json(const ExperimentConfig& c) {
  return {{"dims", c.dims.widths()},
          {"samples", c.samples},
          {"trials", c.trials},
          {"seed", c.seed},
          {"step_policy", to_string(c.step_policy)},
          {"step_size", c.step_size},
          {"max_iters", c.max_iters},
          {"grad_tol", c.grad_tol},
          {"loss_gap_tol", c.loss_gap_tol},
          {"hessian_tol", c.hessian_tol}};
}

nlohmann::json report_json(const CriticalPointReport& r) {
  return {{"gradient_norm", number(r.gradient_norm)},
          {"grad_threshold", number(r.grad_threshold)},
          {"hessian_min_eig", number(r.hessian_min_eig)},
          {"hessian_max_eig", number(r.hessian_max_eig)},
          {"loss", number(r.loss)},
          {"global_value", number(r.global_value)},
          {"gap", number(r.gap)},
          {"classification", to_string(r.classification)}};
}

nlohmann::json report_json(const TrialResult& t) {
  nlohmann::json j = {{"seed", t.seed},
                      {"trial", t.trial},
                      {"iterations", t.iterations},
                      {"converged", t.converged},
                      {"reached_global", t.reached_global},
                      {"nudges", t.nudges},
                      {"report", report_json(t.report)}};
  if (!t.error.empty()) j["error"] = t.error;
  return j;
}

nlohmann::json report_json(const ExperimentSummary& s) {
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialResult& t : s.trials) trials.push_back(report_json(t));
  const double fraction =
      s.converged == 0 ? 0.0 : static_cast<double>(s.global) / static_cast<double>(s.converged);
  return {{"config", report_json(s.config)},
          {"trials", s.trials.size()},
          {"converged", s.converged},
          {"global", s.global},
          {"saddle_terminated", s.saddle_terminated},
          {"failed", s.failed},
          {"nudges", s.nudges},
          {"global_fraction", fraction},
          {"max_gap", number(s.max_gap)},
          {"verified", s.verified},
          {"per_trial", trials}};
}

nlohmann::json report_json(const MaskedSummary& s) {
  nlohmann::json trials = nlohmann::json::array();
  for (const MaskedTrial& t : s.trials) {
    trials.push_back({{"trial", t.trial},
                      {"iterations", t.iterations},
                      {"converged", t.converged},
                      {"loss", number(t.loss)},
                      {"gradient_norm", number(t.gradient_norm)},
                      {"success", t.success},
                      {"nudges", t.nudges}});
  }
  nlohmann::json j = {{"empirical", true},
                      {"config", report_json(s.config)},
                      {"observed", s.observed},
                      {"entries", s.entries},
                      {"best_value", number(s.best_value)},
                      {"success_fraction", s.success_fraction},
                      {"per_trial", trials}};
  j["global_value"] = s.global_value ? number(*s.global_value) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json report_json(const RepairResult& r) {
  return {{"displacement", number(r.displacement)},
          {"loss_before", number(r.loss_before)},
          {"loss_after", number(r.loss_after)},
          {"loss_delta", number(r.loss_after - r.loss_before)},
          {"product_rank", r.product_rank},
          {"per_layer_ranks", r.layer_ranks}};
}

nlohmann::json report_json(const WitnessResult& w) {
  return {{"rank", w.rank},
          {"deep_loss", number(w.deep_loss)},
          {"shallow_loss", number(w.shallow_loss)},
          {"samples", w.samples},
          {"min_sampled_change", number(w.min_sampled_change)},
          {"sweep", report_json(w.sweep)}};
}

nlohmann::json report_json(const BlockReport& r) {
  return {{"is_block_diagonal", r.is_block_diagonal},
          {"is_symmetric", r.is_symmetric},
          {"is_projection", r.is_projection},
          {"projection_defect", r.projection_defect},
          {"ranks", r.allocation.ranks},
          {"budget", r.budget},
          {"is_global", r.is_global},
          {"value", number(r.value)},
          {"global_value", number(r.global_value)}};
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& trajectory) {
  os << "iteration,loss,gradient_norm\n" << std::setprecision(17);
  for (const TrajectoryPoint& p : trajectory) os << p.iteration << ',' << p.loss << ',' << p.gradient_norm << '\n';
}

}  // namespace landscape
