#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gmmdeploy/simulator.hpp"

namespace gmmdeploy {

/// Shortest round-trip decimal form ("%.17g"), locale independent.
std::string format_number(double x);

std::string mixture_json(int agent, const Mixture& m, const std::string& run_id);
Mixture parse_mixture_json(const std::string& text);

std::string plan_json(const AssignmentPlan& plan, const std::string& run_id);
AssignmentPlan parse_plan_json(const std::string& text, int agents);

std::string costs_csv(const MatrixXd& costs);
std::string trajectories_csv(const std::vector<UnicycleTrajectory>& trajectories);
std::string metrics_json(const RunReport& report);

/// Accumulates consensus states as CSV rows
/// (loop, component, stream, round, node, y0..).
class ConsensusTraceWriter {
 public:
  ConsensusTraceWriter();
  EmTrace callback();
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

std::string read_text(const std::filesystem::path& path);
/// Throws ConfigError when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Stage-wise artifacts.
void write_estimates(const std::filesystem::path& dir, const std::vector<Mixture>& estimates,
                     const std::string& run_id);
std::vector<Mixture> read_estimates(const std::filesystem::path& dir, int agents);

/// metrics.json, plan.json, gmm_agent<i>.json, costs.csv, trajectories.csv,
/// estimate.svg, qos.svg.
void write_report(const std::filesystem::path& dir, const Scenario& s, const RunReport& report);

}  // namespace gmmdeploy
