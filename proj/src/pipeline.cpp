#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gmmdeploy/simulator.hpp"

namespace gmmdeploy {

namespace {

template <class F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(stage) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(stage) + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(stage) + ": " + e.what());
  } catch (const std::exception& e) {
    throw NumericalError(std::string(stage) + ": " + e.what());
  }
}

std::uint64_t label_hash(std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Vec2 draw_from(const Mixture& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double r = u(rng);
  int k = m.size() - 1;
  double acc = 0.0;
  for (int j = 0; j < m.size(); ++j) {
    acc += m[j].weight;
    if (r < acc) {
      k = j;
      break;
    }
  }
  const Eigen::LLT<Mat2> llt(m[k].cov);
  if (llt.info() != Eigen::Success) throw NumericalError("mixture component is not positive definite");
  const double z0 = n(rng);
  const double z1 = n(rng);
  return m[k].mean + llt.matrixL() * Vec2(z0, z1);
}

std::vector<Pose> initial_poses(const Scenario& s) {
  std::vector<Pose> out;
  for (const auto& a : s.agents) out.emplace_back(a.initial.position, a.initial.heading);
  return out;
}

std::vector<ServiceProfile> profiles(const Scenario& s) {
  std::vector<ServiceProfile> out;
  for (const auto& a : s.agents) out.push_back(a.profile);
  return out;
}

}  // namespace

std::mt19937_64 substream(std::uint64_t seed, std::string_view label) {
  const std::uint64_t h = label_hash(label);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

std::vector<Vec2> generate_targets(const Mixture& truth, int count, std::mt19937_64& rng) {
  validate_mixture(truth);
  std::vector<Vec2> out;
  out.reserve(std::max(count, 0));
  for (int i = 0; i < count; ++i) out.push_back(draw_from(truth, rng));
  return out;
}

TargetSet partition_targets(std::span<const Vec2> targets, std::span<const int> active_agents,
                            std::span<const Vec2> active_positions,
                            std::optional<std::span<const int>> quotas, std::mt19937_64& rng) {
  if (active_agents.empty()) throw ConfigError("partition: no active agents");
  if (active_positions.size() != active_agents.size()) {
    throw std::invalid_argument("partition: one position per active agent required");
  }
  TargetSet out;
  out.points.assign(targets.begin(), targets.end());
  out.owner.assign(targets.size(), -1);
  if (quotas) {
    if (quotas->size() != active_agents.size()) {
      throw ConfigError("partition: one quota per active agent required");
    }
    long long sum = 0;
    for (int q : *quotas) {
      if (q < 0) throw ConfigError("partition: negative quota");
      sum += q;
    }
    if (sum != static_cast<long long>(targets.size())) {
      throw ConfigError("partition: quotas sum to " + std::to_string(sum) + " but there are " +
                        std::to_string(targets.size()) + " targets");
    }
    std::vector<int> order(targets.size());
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with an explicit draw so the result does not depend on std::shuffle.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    std::size_t next = 0;
    for (std::size_t a = 0; a < active_agents.size(); ++a) {
      for (int c = 0; c < (*quotas)[a]; ++c) out.owner[order[next++]] = active_agents[a];
    }
    return out;
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::size_t best = 0;
    double best_d = (targets[t] - active_positions[0]).squaredNorm();
    for (std::size_t a = 1; a < active_agents.size(); ++a) {
      const double d = (targets[t] - active_positions[a]).squaredNorm();
      if (d < best_d || (d == best_d && active_agents[a] < active_agents[best])) {
        best = a;
        best_d = d;
      }
    }
    out.owner[t] = active_agents[best];
  }
  return out;
}

McKld mc_kld(const Mixture& p, const Mixture& q, int samples, std::mt19937_64& rng) {
  validate_mixture(p);
  validate_mixture(q);
  if (samples < 2) throw std::invalid_argument("mc_kld: need at least 2 samples");
  McKld out;
  out.samples = samples;
  double mean = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vec2 x = draw_from(p, rng);
    double lq = mixture_log_pdf(q, x);
    if (!(lq >= -700.0)) {
      lq = -700.0;
      ++out.floored;
    }
    const double v = mixture_log_pdf(p, x) - lq;
    const double d = v - mean;
    mean += d / (s + 1);
    m2 += d * (v - mean);
  }
  out.value = mean;
  out.std_error = std::sqrt(m2 / (samples - 1) / samples);
  return out;
}

Mixture collective_qos(std::span<const Pose> poses, std::span<const ServiceProfile> profiles) {
  if (poses.size() != profiles.size() || poses.empty()) {
    throw std::invalid_argument("collective_qos: need one pose per profile");
  }
  double total = 0.0;
  for (const auto& p : profiles) {
    if (!(p.scale > 0.0)) throw std::invalid_argument("collective_qos: scale must be positive");
    total += p.scale;
  }
  Mixture m;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    GaussianComponent c;
    c.weight = profiles[i].scale / total;
    c.mean = poses[i].position;
    c.cov = service_covariance(profiles[i], poses[i].heading);
    m.components.push_back(c);
  }
  return m;
}

double agreement_spread(const std::vector<Mixture>& estimates) {
  double out = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    for (std::size_t j = i + 1; j < estimates.size(); ++j) {
      const int n = std::min(estimates[i].size(), estimates[j].size());
      for (int k = 0; k < n; ++k) {
        out = std::max(out, (estimates[i][k].mean - estimates[j][k].mean).norm());
      }
    }
  }
  return out;
}

Stage1Result run_stage1(const Scenario& s, const EmTrace& trace) {
  return staged("stage1", [&] {
    Stage1Result r;
    auto target_rng = substream(s.seed, "targets");
    r.targets = generate_targets(s.truth, s.num_targets, target_rng);

    const auto active = s.active_agents();
    std::vector<Vec2> positions;
    std::vector<int> quotas;
    for (int i : active) {
      positions.push_back(s.agents[i].initial.position);
      if (s.agents[i].quota) quotas.push_back(*s.agents[i].quota);
    }
    auto partition_rng = substream(s.seed, "partition");
    std::optional<std::span<const int>> q;
    if (s.has_quotas()) q = std::span<const int>(quotas);
    r.target_set = partition_targets(r.targets, active, positions, q, partition_rng);

    auto init_rng = substream(s.seed, "init");
    r.init = initial_mixture(s.size(), s.arena, init_rng);

    DistributedEmOptions opt;
    opt.loops = s.params.loops;
    opt.rounds = s.params.rounds;
    opt.delta_c = s.params.delta_c;
    opt.eta_scale = s.params.eta_scale;
    opt.covariance_floor = s.covariance_floor();
    opt.trace = trace;
    r.em = distributed_em(s.graph, r.target_set, r.init, opt);
    return r;
  });
}

AssignmentStage run_assignment(const Scenario& s, const std::vector<Mixture>& estimates,
                               bool shared_estimate) {
  return staged("assignment", [&] {
    const int n = s.size();
    if (static_cast<int>(estimates.size()) != n) {
      throw std::invalid_argument("one estimate per agent required");
    }
    AssignmentStage r;
    r.costs.resize(n, n);
    r.placements.resize(n);
    for (int i = 0; i < n; ++i) {
      const Mixture& est = shared_estimate ? estimates[0] : estimates[i];
      if (est.size() != n) throw std::invalid_argument("estimate must have one component per agent");
      for (int k = 0; k < n; ++k) {
        r.placements[i].push_back(optimal_pose(s.agents[i].profile, est[k]));
        r.costs(i, k) = r.placements[i].back().cost;
      }
    }
    if (!r.costs.allFinite()) throw NumericalError("non-finite cost matrix");
    const AssignmentLp lp = build_problem(r.costs);
    r.simplex = distributed_simplex(s.graph, lp.agent_columns);
    for (const Basis& b : r.simplex.bases) {
      if (b.ids() != r.simplex.bases[0].ids()) throw NumericalError("agents disagree on the optimal basis");
    }
    r.plan = extract_assignment(r.simplex.bases[0]);
    r.value = r.plan.value(r.costs);
    return r;
  });
}

TransportStage run_transport(const Scenario& s, const std::vector<Mixture>& estimates,
                             const AssignmentPlan& plan) {
  return staged("transport", [&] {
    const int n = s.size();
    if (static_cast<int>(plan.region_of_agent.size()) != n || !plan.is_bijection()) {
      throw std::invalid_argument("plan is not a bijection over the agents");
    }
    if (static_cast<int>(estimates.size()) != n) {
      throw std::invalid_argument("one estimate per agent required");
    }
    TransportStage r;
    for (int i = 0; i < n; ++i) {
      const int k = plan.region_of_agent[i];
      r.destinations.push_back(optimal_pose(s.agents[i].profile, estimates[i][k]).pose);
    }
    for (int i = 0; i < n; ++i) {
      try {
        r.trajectories.push_back(plan_transport(s.agents[i].initial, r.destinations[i],
                                                s.params.v_star, s.params.tau, s.params.dt,
                                                s.params.v_min));
      } catch (const SingularityError& e) {
        throw SingularityError("agent " + std::to_string(i) + ": " + e.what(), e.min_speed());
      }
      const UnicycleState& end = r.trajectories.back().samples.back().state;
      r.final_poses.emplace_back(end.position, end.heading);
    }
    return r;
  });
}

Metrics compute_metrics(const Scenario& s, const Stage1Result& stage1,
                        const AssignmentStage& assignment, const TransportStage& transport,
                        int mc_samples) {
  return staged("metrics", [&] {
    Metrics m;
    const Mixture& ref = stage1.em.estimates.at(0);
    const auto prof = profiles(s);
    const auto start = initial_poses(s);
    const Mixture q_pre = collective_qos(start, prof);
    const Mixture q_post = collective_qos(transport.final_poses, prof);
    // Common random numbers: pre and post see the same draws from the estimate.
    auto rng_pre = substream(s.seed, "mc");
    auto rng_post = substream(s.seed, "mc");
    m.pre = mc_kld(ref, q_pre, mc_samples, rng_pre);
    m.post = mc_kld(ref, q_post, mc_samples, rng_post);
    auto rng_truth = substream(s.seed, "mc-truth");
    m.truth_post = mc_kld(s.truth, q_post, mc_samples, rng_truth);
    auto rng_truth_est = substream(s.seed, "mc-truth");
    m.truth_estimate = mc_kld(s.truth, ref, mc_samples, rng_truth_est);
    for (double w : stage1.em.raw_weight_sums) {
      m.consensus_residual = std::max(m.consensus_residual, std::abs(w - 1.0));
    }
    m.agreement_spread = agreement_spread(stage1.em.estimates);
    m.assignment_value = assignment.value;
    m.simplex_rounds = assignment.simplex.rounds;
    m.min_speed = std::numeric_limits<double>::infinity();
    for (const auto& t : transport.trajectories) m.min_speed = std::min(m.min_speed, t.min_speed);
    return m;
  });
}

RunReport run_pipeline(const Scenario& s, const PipelineOptions& options) {
  RunReport r;
  r.run_id = s.run_id;
  r.seed = s.seed;
  r.initial_poses = initial_poses(s);
  r.stage1 = run_stage1(s, options.em_trace);
  r.assignment = run_assignment(s, r.stage1.em.estimates, options.shared_estimate);
  if (options.shared_estimate) {
    const std::vector<Mixture> shared(s.size(), r.stage1.em.estimates.at(0));
    r.transport = run_transport(s, shared, r.assignment.plan);
  } else {
    r.transport = run_transport(s, r.stage1.em.estimates, r.assignment.plan);
  }
  r.metrics = compute_metrics(s, r.stage1, r.assignment, r.transport,
                              options.mc_samples.value_or(s.params.mc_samples));
  return r;
}

}  // namespace gmmdeploy
