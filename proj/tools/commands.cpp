#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "landscape/constructors.hpp"
#include "landscape/error.hpp"
#include "landscape/linalg.hpp"
#include "landscape/matrix_io.hpp"
#include "landscape/random.hpp"
#include "landscape/report.hpp"
#include "landscape/shallow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace landscape::cli {
namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void emit(const Common& c, RunManifest manifest, const Stopwatch& sw, json body) {
  manifest.duration_seconds = sw.seconds();
  if (c.out != "-") manifest.outputs.push_back(c.out);
  json doc = {{"manifest", report_json(manifest)}};
  for (auto& [k, v] : body.items()) doc[k] = std::move(v);
  const std::string text = doc.dump(2) + "\n";
  if (c.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream os(c.out);
  if (!os) throw IoError("cannot write report to " + c.out);
  os << text;
}

RunManifest manifest_for(const std::string& command, const Common& c) {
  RunManifest m;
  m.command = command;
  m.config["seed"] = c.seed;
  m.config["parallel"] = c.parallel;
  return m;
}

std::string weights_dir(const std::string& given, const std::string& data) {
  if (!given.empty()) return given;
  if (data.empty()) throw PreconditionError("--weights is required");
  return (fs::path(data) / "weights").string();
}

json check(const std::string& name, bool passed, double measured, double tolerance, const std::string& detail = {}) {
  json j = {{"name", name}, {"passed", passed}, {"measured", measured}, {"tolerance", tolerance}};
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

ExperimentConfig verify_config(const Common& c, const VerifyOptions& o) {
  ExperimentConfig cfg;
  cfg.dims = NetworkDims::parse(o.dims);
  cfg.samples = o.samples;
  cfg.trials = o.trials;
  cfg.seed = c.seed;
  cfg.workers = c.parallel;
  cfg.max_iters = o.max_iters;
  return cfg;
}

// Deep-to-shallow witness at a trained (or supplied) minimum.
json verify_witness(const Common& c, const VerifyOptions& o, json& details) {
  json checks = json::array();
  PerturbationBudget budget(o.delta);
  WitnessOptions wopt;
  wopt.samples = o.certificate_samples;
  wopt.seed = c.seed;

  auto run_one = [&](const WeightStack& w, const Dataset& data, const std::string& label) {
    try {
      const WitnessResult res = deep_to_shallow_witness(w, data, budget, wopt);
      const double diff = std::abs(res.shallow_loss - res.deep_loss);
      const double global = deep_global_value(data, w.dims());
      const double gap = res.shallow_loss - global;
      const std::size_t dp = w.dims().bottleneck_width();
      checks.push_back(check(label + ".value_match", diff <= 1e-8 * (1.0 + res.deep_loss), diff, 1e-8));
      checks.push_back(check(label + ".rank_is_bottleneck", res.rank == dp, static_cast<double>(res.rank),
                             static_cast<double>(dp)));
      checks.push_back(check(label + ".certified", true, res.min_sampled_change, 0.0));
      checks.push_back(check(label + ".global_value", gap <= 1e-6 * (1.0 + global), gap, 1e-6));
      details[label] = report_json(res);
    } catch (const Error& e) {
      checks.push_back(check(label + ".witness", false, 0.0, 0.0, e.name() + ": " + e.what()));
    }
  };

  if (!o.weights.empty() || !o.data.empty()) {
    if (o.data.empty()) throw PreconditionError("--data is required with --weights");
    const Dataset data = load_dataset(o.data);
    run_one(load_weights(weights_dir(o.weights, o.data)), data, "checkpoint");
    return checks;
  }
  ExperimentConfig cfg = verify_config(c, o);
  const std::size_t runs = std::min<std::size_t>(cfg.trials, 5);
  for (std::size_t t = 0; t < runs; ++t) {
    auto [data, w0] = generate_instance(cfg, t);
    const TrialResult trained = gradient_descent(w0, data, cfg, c.seed + t);
    if (!trained.converged) {
      checks.push_back(check("trial" + std::to_string(t) + ".converged", false, trained.report.gradient_norm,
                             trained.report.grad_threshold, "descent did not reach a critical point"));
      continue;
    }
    run_one(trained.weights, data, "trial" + std::to_string(t));
  }
  return checks;
}

// Closed-form optimum against the objective evaluated at the constructed
// minimizer, plus sampled rank-k competitors that must not do better.
json verify_shallow(const Common& c, const VerifyOptions& o, json& details) {
  const ExperimentConfig cfg = verify_config(c, o);
  const std::size_t d0 = cfg.dims.input_width();
  const std::size_t dh = cfg.dims.output_width();
  double worst_rel = 0.0;
  double worst_beat = 0.0;
  std::size_t worst_rank_excess = 0;
  std::size_t cases = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    auto [data, w0] = generate_instance(cfg, t);
    const ReducedProblem p = reduce_to_diagonal(data);
    std::mt19937_64 rng = make_generator(c.seed, 1000 + t);
    for (std::size_t k = 0; k <= std::min(d0, dh); ++k) {
      const double value = global_min_value(p.spectrum(), k) + p.constant;
      const Matrix rstar = global_minimizer(data, k);
      const double at = shallow_loss(rstar, data);
      worst_rel = std::max(worst_rel, std::abs(at - value) / (1.0 + value));
      const std::size_t r = numerical_rank(rstar);
      if (r > k) worst_rank_excess = std::max(worst_rank_excess, r - k);
      for (int s = 0; s < 10 && k > 0; ++s) {
        const Matrix cand = gaussian_matrix(dh, k, rng) * gaussian_matrix(k, d0, rng);
        const Matrix near = rstar + 1e-3 * cand;
        const SvdTriple sv = svd(near);
        Matrix trunc(dh, d0);
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t a = 0; a < dh; ++a)
            for (std::size_t b = 0; b < d0; ++b) trunc(a, b) += sv.S[i] * sv.U(a, i) * sv.V(b, i);
        worst_beat = std::max(worst_beat, (value - shallow_loss(trunc, data)) / (1.0 + value));
      }
      ++cases;
    }
  }
  details["shallow_cases"] = cases;
  json checks = json::array();
  checks.push_back(check("shallow.closed_form_matches_minimizer", worst_rel <= 1e-8, worst_rel, 1e-8));
  checks.push_back(check("shallow.minimizer_rank_within_budget", worst_rank_excess == 0,
                         static_cast<double>(worst_rank_excess), 0.0));
  checks.push_back(check("shallow.no_rank_k_competitor_better", worst_beat <= 1e-10, worst_beat, 1e-10));
  return checks;
}

json verify_landscape(const Common& c, const VerifyOptions& o, json& details) {
  const ExperimentSummary sum = no_bad_local_minima_experiment(verify_config(c, o));
  details["experiment"] = report_json(sum);
  const double fraction =
      sum.converged == 0 ? 0.0 : static_cast<double>(sum.global) / static_cast<double>(sum.converged);
  json checks = json::array();
  checks.push_back(check("landscape.some_trial_converged", sum.converged > 0, static_cast<double>(sum.converged),
                         1.0));
  checks.push_back(check("landscape.converged_are_global", sum.verified && sum.converged > 0, fraction, 1.0));
  double worst = 0.0;
  for (const TrialResult& t : sum.trials) {
    if (t.converged) worst = std::max(worst, t.report.gap / (1.0 + t.report.global_value));
  }
  checks.push_back(check("landscape.max_relative_gap", worst <= sum.config.loss_gap_tol, worst,
                         sum.config.loss_gap_tol));
  return checks;
}

}  // namespace

std::uint64_t effective_seed(std::uint64_t flag) {
  const char* env = std::getenv("LANDSCAPE_SEED");
  if (env == nullptr || *env == '\0') return flag;
  const std::string text(env);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.front() == '-') throw PreconditionError("LANDSCAPE_SEED is not an unsigned integer: " + text);
  return v;
}

int run_gen(const Common& c, const GenOptions& o) {
  const Stopwatch sw;
  if (c.out == "-") throw PreconditionError("gen writes a directory; pass --out DIR");
  ExperimentConfig cfg;
  cfg.dims = NetworkDims::parse(o.dims);
  cfg.samples = o.samples;
  cfg.seed = c.seed;
  auto [data, w0] = generate_instance(cfg);
  const fs::path dir(c.out);
  save_dataset(dir, data);
  save_weights(dir / "weights", w0);

  RunManifest m = manifest_for("gen", c);
  m.config["dims"] = cfg.dims.widths();
  m.config["samples"] = cfg.samples;
  m.outputs = {(dir / "X.txt").string(), (dir / "Y.txt").string(), (dir / "weights").string()};
  m.duration_seconds = sw.seconds();
  std::ofstream os(dir / "manifest.json");
  if (!os) throw IoError("cannot write " + (dir / "manifest.json").string());
  os << json({{"manifest", report_json(m)}}).dump(2) << '\n';
  return 0;
}

int run_train(const Common& c, const TrainOptions& o) {
  const Stopwatch sw;
  if (o.save.empty()) throw PreconditionError("--save DIR is required");
  const Dataset data = load_dataset(o.data);
  const std::string init = weights_dir(o.init, o.data);
  const WeightStack w0 = load_weights(init);

  ExperimentConfig cfg;
  cfg.dims = w0.dims();
  cfg.samples = data.samples();
  cfg.seed = c.seed;
  cfg.step_policy = parse_step_policy(o.step_policy);
  cfg.step_size = o.step_size;
  cfg.max_iters = o.max_iters;
  cfg.grad_tol = o.grad_tol;
  cfg.loss_gap_tol = o.loss_gap_tol;
  cfg.hessian_tol = o.hessian_tol;
  cfg.record_trajectory = true;
  const TrialResult res = gradient_descent(w0, data, cfg, c.seed);

  save_weights(o.save, res.weights);
  const std::string traj = o.trajectory.empty() ? (fs::path(o.save) / "trajectory.csv").string() : o.trajectory;
  std::ofstream os(traj);
  if (!os) throw IoError("cannot write " + traj);
  write_trajectory_csv(os, res.trajectory);

  RunManifest m = manifest_for("train", c);
  m.config["experiment"] = report_json(cfg);
  m.inputs = {o.data, init};
  m.outputs = {o.save, traj};
  emit(c, std::move(m), sw, {{"result", report_json(res)}});
  return 0;
}

int run_analyze(const Common& c, const AnalyzeOptions& o) {
  const Stopwatch sw;
  const Dataset data = load_dataset(o.data);
  const std::string wdir = weights_dir(o.weights, o.data);
  const WeightStack w = load_weights(wdir);
  ExperimentConfig cfg;
  cfg.dims = w.dims();
  cfg.grad_tol = o.grad_tol;
  cfg.loss_gap_tol = o.loss_gap_tol;
  cfg.hessian_tol = o.hessian_tol;
  const CriticalPointReport rep = classify_critical_point(w, data, cfg);
  RunManifest m = manifest_for("analyze", c);
  m.config["grad_tol"] = o.grad_tol;
  m.config["loss_gap_tol"] = o.loss_gap_tol;
  m.config["hessian_tol"] = o.hessian_tol;
  m.inputs = {o.data, wdir};
  emit(c, std::move(m), sw, {{"result", report_json(rep)}});
  return 0;
}

int run_perturb_repair(const Common& c, const PerturbOptions& o) {
  const Stopwatch sw;
  const Dataset data = load_dataset(o.data);
  const std::string wdir = weights_dir(o.weights, o.data);
  const WeightStack w = load_weights(wdir);
  if (o.layer < 1 || o.layer > w.depth()) {
    throw DimensionError("--layer must lie in 1.." + std::to_string(w.depth()));
  }
  const RepairResult res = full_rank_perturbation(w, o.layer - 1, data, PerturbationBudget(o.delta, o.mu));
  if (!o.save.empty()) save_weights(o.save, res.repaired);
  RunManifest m = manifest_for("perturb repair", c);
  m.config["layer"] = o.layer;
  m.config["delta"] = o.delta;
  m.config["mu"] = o.mu;
  m.inputs = {o.data, wdir};
  if (!o.save.empty()) m.outputs.push_back(o.save);
  emit(c, std::move(m), sw, {{"result", report_json(res)}});
  return 0;
}

int run_perturb_sweep(const Common& c, const PerturbOptions& o) {
  const Stopwatch sw;
  const Dataset data = load_dataset(o.data);
  const std::string wdir = weights_dir(o.weights, o.data);
  const WeightStack w = load_weights(wdir);
  const RepairResult res = rank_restoring_sweep(w, data, PerturbationBudget(o.delta, o.mu));
  if (!o.save.empty()) save_weights(o.save, res.repaired);
  RunManifest m = manifest_for("perturb sweep", c);
  m.config["delta"] = o.delta;
  m.config["mu"] = o.mu;
  m.inputs = {o.data, wdir};
  if (!o.save.empty()) m.outputs.push_back(o.save);
  emit(c, std::move(m), sw, {{"result", report_json(res)}});
  return 0;
}

int run_perturb_factor(const Common& c, const PerturbOptions& o) {
  const Stopwatch sw;
  if (o.weights.empty() || o.target.empty()) throw PreconditionError("--weights and --target are required");
  const WeightStack wbar = load_weights(o.weights);
  const Matrix r = io::load_matrix(o.target);
  const WeightStack w = factor_perturbed_product(wbar, r);
  if (!o.save.empty()) save_weights(o.save, w);

  std::vector<double> per_layer;
  double worst = 0.0;
  for (std::size_t l = 0; l < w.depth(); ++l) {
    per_layer.push_back(max_abs_diff(w.layer(l), wbar.layer(l)));
    worst = std::max(worst, per_layer.back());
  }
  const double residual = max_abs_diff(product(w), r);
  RunManifest m = manifest_for("perturb factor", c);
  m.inputs = {o.weights, o.target};
  if (!o.save.empty()) m.outputs.push_back(o.save);
  emit(c, std::move(m), sw,
       {{"result",
         {{"product_residual", residual},
          {"target_perturbation", max_abs_diff(r, product(wbar))},
          {"displacement", worst},
          {"per_layer_displacement", per_layer},
          {"product_rank", numerical_rank(product(w))}}}});
  return 0;
}

int run_verify(const Common& c, const VerifyOptions& o) {
  const Stopwatch sw;
  const std::string& th = o.theorem;
  if (th != "1" && th != "2" && th != "3" && th != "all") {
    throw PreconditionError("--theorem must be 1, 2, 3 or all");
  }
  json details = json::object();
  json checks = json::array();
  auto append = [&](const json& more) {
    for (const json& j : more) checks.push_back(j);
  };
  if (th == "1" || th == "all") append(verify_witness(c, o, details));
  if (th == "2" || th == "all") append(verify_shallow(c, o, details));
  if (th == "3" || th == "all") append(verify_landscape(c, o, details));

  bool passed = !checks.empty();
  for (const json& j : checks) {
    if (!j["passed"].get<bool>()) {
      passed = false;
      std::cerr << "check failed: " << j["name"].get<std::string>();
      if (j.contains("detail")) std::cerr << " (" << j["detail"].get<std::string>() << ")";
      std::cerr << '\n';
    }
  }
  RunManifest m = manifest_for("verify", c);
  m.config["theorem"] = th;
  m.config["dims"] = o.dims;
  m.config["samples"] = o.samples;
  m.config["trials"] = o.trials;
  m.config["delta"] = o.delta;
  m.config["certificate_samples"] = o.certificate_samples;
  m.config["max_iters"] = o.max_iters;
  if (!o.data.empty()) m.inputs.push_back(o.data);
  if (!o.weights.empty()) m.inputs.push_back(o.weights);
  emit(c, std::move(m), sw, {{"passed", passed}, {"checks", checks}, {"details", details}});
  return passed ? 0 : 1;
}

int run_complete(const Common& c, const CompleteOptions& o) {
  const Stopwatch sw;
  ExperimentConfig cfg;
  cfg.dims = NetworkDims::parse(o.dims);
  cfg.trials = o.trials;
  cfg.seed = c.seed;
  cfg.workers = c.parallel;
  cfg.max_iters = o.max_iters;
  cfg.loss_gap_tol = o.loss_gap_tol;
  Matrix y = o.target.empty()
                 ? planted_low_rank(cfg.dims.output_width(), cfg.dims.input_width(), o.rank, c.seed)
                 : io::load_matrix(o.target);
  const MaskedDataset masked = MaskedDataset::sample(std::move(y), cfg.dims, o.observe, c.seed);
  const MaskedSummary sum = masked_completion_experiment(cfg, masked);

  RunManifest m = manifest_for("complete", c);
  m.config["experiment"] = report_json(cfg);
  m.config["observe_fraction"] = o.observe;
  m.config["rank"] = o.rank;
  if (!o.target.empty()) m.inputs.push_back(o.target);
  emit(c, std::move(m), sw, {{"result", report_json(sum)}});
  return 0;
}

}  // namespace landscape::cli
