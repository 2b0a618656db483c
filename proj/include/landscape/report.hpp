#pragma once
// JSON serialization of results, the run manifest every report embeds, and
// trajectory CSV output.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "landscape/constructors.hpp"
#include "landscape/harness.hpp"
#include "landscape/shallow.hpp"

namespace landscape {

std::string tool_version();

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string version = tool_version();
  double duration_seconds = 0.0;
};

nlohmann::json report_json(const RunManifest& m);
nlohmann::json report_json(const ExperimentConfig& c);
nlohmann::json report_json(const CriticalPointReport& r);
/// Trial summary; weights and trajectory are left out.
nlohmann::json report_json(const TrialResult& t);
nlohmann::json report_json(const ExperimentSummary& s);
nlohmann::json report_json(const MaskedSummary& s);
nlohmann::json report_json(const RepairResult& r);
nlohmann::json report_json(const WitnessResult& w);
nlohmann::json report_json(const BlockReport& r);

/// iteration,loss,gradient_norm with a header line.
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectoryPoint>& trajectory);

}  // namespace landscape
