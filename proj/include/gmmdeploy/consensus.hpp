#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gmmdeploy/network.hpp"
#include "gmmdeploy/types.hpp"

namespace gmmdeploy {

/// Per-agent state of the dynamic active weighted average consensus:
/// y is the tracking output, z the integrator, v the auxiliary state.
struct ConsensusState {
  VectorXd y;
  VectorXd z;
  VectorXd v;

  static ConsensusState zeros(int dim) {
    return {VectorXd::Zero(dim), VectorXd::Zero(dim), VectorXd::Zero(dim)};
  }
  int dim() const { return static_cast<int>(z.size()); }
};

/// Weight eta >= 0 and reference r. Passive agents use eta = 0, r = 0.
struct ConsensusInput {
  double eta{0.0};
  VectorXd r;

  static ConsensusInput passive(int dim) { return {0.0, VectorXd::Zero(dim)}; }
};

struct ConsensusOptions {
  double delta_c{0.05};
  /// Common positive factor applied to every eta before the update. The
  /// tracked weighted mean sum(eta r)/sum(eta) does not depend on it, but
  /// the iteration is only stable when delta_c * eta stays O(1).
  double eta_scale{1.0};
  /// Abort threshold on |y|.
  double divergence_bound{1e12};
};

/// Local output y = z + eta r.
VectorXd consensus_output(const ConsensusState& state, const ConsensusInput& input);

/// One iteration for a single agent. Returns (y(l), z(l+1), v(l+1)) given the
/// neighbors' y(l) and v(l). No eta_scale is applied here.
ConsensusState consensus_step(const ConsensusState& state, const ConsensusInput& input,
                              std::span<const VectorXd> neighbor_y,
                              std::span<const VectorXd> neighbor_v, double delta_c);

/// Observer invoked after every round with (round index, per-agent states).
using ConsensusTrace = std::function<void(int, std::span<const ConsensusState>)>;

/// Runs `rounds` synchronous rounds in place on `states` without checking
/// protocol preconditions. Used by warm-started callers (distributed EM)
/// where an all-passive round is legal and simply holds the state.
void advance_consensus(const Graph& g, std::span<const ConsensusInput> inputs,
                       std::span<ConsensusState> states, int rounds,
                       const ConsensusOptions& options, const ConsensusTrace& trace = {});

struct ConsensusRun {
  std::vector<VectorXd> y;
  std::vector<ConsensusState> final_states;
};

/// L rounds of the protocol from the given (z0, v0). Throws ConfigError on a
/// disconnected graph, all-passive inputs or L < 1, NumericalError on divergence.
ConsensusRun run_consensus(const Graph& g, std::span<const ConsensusInput> inputs,
                           std::span<const ConsensusState> init, int rounds,
                           const ConsensusOptions& options = {},
                           const ConsensusTrace& trace = {});

/// Closed-form weighted mean sum(eta r)/sum(eta).
VectorXd weighted_mean(std::span<const ConsensusInput> inputs);

}  // namespace gmmdeploy
