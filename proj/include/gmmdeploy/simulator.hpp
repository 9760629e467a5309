#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmmdeploy/assignment.hpp"
#include "gmmdeploy/control.hpp"
#include "gmmdeploy/divergence.hpp"
#include "gmmdeploy/gmm.hpp"
#include "gmmdeploy/network.hpp"

namespace gmmdeploy {

struct AgentSpec {
  UnicycleState initial;
  ServiceProfile profile;  // rel_weight filled in from all scales
  bool active{false};
  std::optional<int> quota;
};

struct ScenarioParams {
  int rounds{20};  // L
  int loops{50};   // T
  double delta_c{0.05};
  double eta_scale{0.0};  // <= 0: 1 / (delta_c * M)
  double tau{10.0};
  double dt{0.01};
  double v_star{1.0};
  double v_min{kDefaultMinSpeed};
  int mc_samples{200000};
};

struct Scenario {
  std::string name;
  std::uint64_t seed{0};
  Arena arena;
  Mixture truth;
  int num_targets{0};
  std::vector<AgentSpec> agents;
  Graph graph;
  ScenarioParams params;
  /// Hash of the canonical scenario document plus seed.
  std::string run_id;

  int size() const { return static_cast<int>(agents.size()); }
  std::vector<int> active_agents() const;
  bool has_quotas() const;
  double covariance_floor() const { return 1e-6 * arena.scale() * arena.scale(); }
};

/// Parses and validates a scenario document. Throws ConfigError with the
/// offending field on any violation.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Independent RNG stream for a labeled pipeline stage.
std::mt19937_64 substream(std::uint64_t seed, std::string_view label);

/// M i.i.d. draws: categorical on the weights, then a bivariate normal.
std::vector<Vec2> generate_targets(const Mixture& truth, int count, std::mt19937_64& rng);

/// With quotas: seeded shuffle, then consecutive blocks in the order of
/// `active_agents`. Without: each target goes to the nearest active agent
/// (ties to the lower id).
TargetSet partition_targets(std::span<const Vec2> targets, std::span<const int> active_agents,
                            std::span<const Vec2> active_positions,
                            std::optional<std::span<const int>> quotas, std::mt19937_64& rng);

struct McKld {
  double value{0.0};
  double std_error{0.0};
  int samples{0};
  /// Samples whose log q fell below the -700 floor.
  int floored{0};
};

/// Monte-Carlo KL(p || q) from samples of p.
McKld mc_kld(const Mixture& p, const Mixture& q, int samples, std::mt19937_64& rng);

/// Normalized collective QoS: weights z_i / sum z, means at the agents,
/// covariances rotated to the agents' headings.
Mixture collective_qos(std::span<const Pose> poses, std::span<const ServiceProfile> profiles);

struct Stage1Result {
  std::vector<Vec2> targets;
  TargetSet target_set;
  Mixture init;
  DistributedEmResult em;
};

struct AssignmentStage {
  MatrixXd costs;  // row = agent, column = region
  std::vector<std::vector<OptimalPlacement<double>>> placements;
  DistributedSimplexResult simplex;
  AssignmentPlan plan;
  double value{0.0};
};

struct TransportStage {
  std::vector<Pose> destinations;
  std::vector<UnicycleTrajectory> trajectories;
  std::vector<Pose> final_poses;
};

struct Metrics {
  McKld pre;   // estimate vs QoS at the initial poses
  McKld post;  // estimate vs QoS at the final poses
  McKld truth_post;
  McKld truth_estimate;
  double consensus_residual{0.0};
  double agreement_spread{0.0};
  double assignment_value{0.0};
  int simplex_rounds{0};
  double min_speed{0.0};
};

struct RunReport {
  std::string run_id;
  std::uint64_t seed{0};
  Stage1Result stage1;
  AssignmentStage assignment;
  TransportStage transport;
  std::vector<Pose> initial_poses;
  Metrics metrics;
};

struct PipelineOptions {
  /// Every agent prices its row from agent 0's estimate.
  bool shared_estimate{false};
  std::optional<int> mc_samples;
  EmTrace em_trace;
};

Stage1Result run_stage1(const Scenario& s, const EmTrace& trace = {});
AssignmentStage run_assignment(const Scenario& s, const std::vector<Mixture>& estimates,
                               bool shared_estimate);
TransportStage run_transport(const Scenario& s, const std::vector<Mixture>& estimates,
                             const AssignmentPlan& plan);
Metrics compute_metrics(const Scenario& s, const Stage1Result& stage1,
                        const AssignmentStage& assignment, const TransportStage& transport,
                        int mc_samples);

/// Targets, distributed EM, costs, distributed simplex, transport, metrics.
RunReport run_pipeline(const Scenario& s, const PipelineOptions& options = {});

/// max over agents, components of |mu_k^i - mu_k^j|.
double agreement_spread(const std::vector<Mixture>& estimates);

}  // namespace gmmdeploy
