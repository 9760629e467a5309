#include "gmmdeploy/consensus.hpp"

#include <cmath>
#include <string>

namespace gmmdeploy {

namespace {

struct Broadcast {
  VectorXd y;
  VectorXd v;
};

void check_dims(const ConsensusState& s, const ConsensusInput& in) {
  const auto d = s.z.size();
  if (s.v.size() != d || in.r.size() != d) {
    throw std::invalid_argument("consensus: dimension mismatch");
  }
}

}  // namespace

VectorXd consensus_output(const ConsensusState& state, const ConsensusInput& input) {
  check_dims(state, input);
  return state.z + input.eta * input.r;
}

ConsensusState consensus_step(const ConsensusState& state, const ConsensusInput& input,
                              std::span<const VectorXd> neighbor_y,
                              std::span<const VectorXd> neighbor_v, double delta_c) {
  check_dims(state, input);
  if (neighbor_y.size() != neighbor_v.size()) {
    throw std::invalid_argument("consensus: neighbor y/v lists differ in length");
  }
  if (!(delta_c > 0.0)) throw std::invalid_argument("consensus: delta_c must be positive");

  const auto d = state.z.size();
  ConsensusState next;
  next.y = state.z + input.eta * input.r;

  VectorXd y_disagreement = VectorXd::Zero(d);
  VectorXd v_disagreement = VectorXd::Zero(d);
  for (std::size_t j = 0; j < neighbor_y.size(); ++j) {
    if (neighbor_y[j].size() != d || neighbor_v[j].size() != d) {
      throw std::invalid_argument("consensus: neighbor dimension mismatch");
    }
    y_disagreement += next.y - neighbor_y[j];
    v_disagreement += state.v - neighbor_v[j];
  }

  next.z = state.z - delta_c * input.eta * (next.y - input.r) - delta_c * y_disagreement -
           delta_c * v_disagreement;
  next.v = state.v + delta_c * y_disagreement;
  return next;
}

void advance_consensus(const Graph& g, std::span<const ConsensusInput> inputs,
                       std::span<ConsensusState> states, int rounds,
                       const ConsensusOptions& options, const ConsensusTrace& trace) {
  const int n = g.size();
  if (static_cast<int>(inputs.size()) != n || static_cast<int>(states.size()) != n) {
    throw std::invalid_argument("consensus: need one input and one state per node");
  }
  std::vector<ConsensusInput> scaled(inputs.begin(), inputs.end());
  for (auto& in : scaled) in.eta *= options.eta_scale;

  std::vector<Broadcast> outgoing(n);
  std::vector<VectorXd> ny, nv;
  for (int l = 0; l < rounds; ++l) {
    for (int i = 0; i < n; ++i) {
      outgoing[i] = {consensus_output(states[i], scaled[i]), states[i].v};
    }
    const auto mail = sync_round(g, outgoing);
    for (int i = 0; i < n; ++i) {
      ny.clear();
      nv.clear();
      for (const auto& env : mail.inbox(i)) {
        ny.push_back(env.payload.y);
        nv.push_back(env.payload.v);
      }
      states[i] = consensus_step(states[i], scaled[i], ny, nv, options.delta_c);
      if (!std::isfinite(states[i].y.norm()) ||
          states[i].y.cwiseAbs().maxCoeff() > options.divergence_bound) {
        throw NumericalError("consensus diverged at round " + std::to_string(l) + " (node " +
                             std::to_string(i) + "); reduce delta_c or eta_scale");
      }
    }
    if (trace) trace(l, states);
  }
}

ConsensusRun run_consensus(const Graph& g, std::span<const ConsensusInput> inputs,
                           std::span<const ConsensusState> init, int rounds,
                           const ConsensusOptions& options, const ConsensusTrace& trace) {
  if (rounds < 1) throw ConfigError("consensus: need at least one round");
  if (!is_connected(g)) throw ConfigError("consensus: communication graph is disconnected");
  bool any_active = false;
  for (const auto& in : inputs) any_active = any_active || in.eta > 0.0;
  if (!any_active) throw ConfigError("consensus: all agents passive, weighted mean undefined");
  for (const auto& in : inputs) {
    if (in.eta < 0.0) throw ConfigError("consensus: weights must be nonnegative");
  }

  ConsensusRun run;
  run.final_states.assign(init.begin(), init.end());
  advance_consensus(g, inputs, run.final_states, rounds, options, trace);
  for (const auto& s : run.final_states) run.y.push_back(s.y);
  return run;
}

VectorXd weighted_mean(std::span<const ConsensusInput> inputs) {
  if (inputs.empty()) throw std::invalid_argument("weighted_mean: no inputs");
  VectorXd acc = VectorXd::Zero(inputs.front().r.size());
  double total = 0.0;
  for (const auto& in : inputs) {
    acc += in.eta * in.r;
    total += in.eta;
  }
  if (!(total > 0.0)) throw ConfigError("weighted_mean: total weight is zero");
  return acc / total;
}

}  // namespace gmmdeploy
