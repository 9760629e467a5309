#include "gmmdeploy/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace gmmdeploy {

void validate_mixture(const Mixture& m, double weight_tol) {
  if (m.components.empty()) throw std::invalid_argument("mixture has no components");
  double total = 0.0;
  for (int k = 0; k < m.size(); ++k) {
    const auto& c = m[k];
    if (!(c.weight >= 0.0 && c.weight <= 1.0 + weight_tol)) {
      throw std::invalid_argument("component " + std::to_string(k) + ": weight outside [0,1]");
    }
    if (!is_spd(c.cov)) {
      throw std::invalid_argument("component " + std::to_string(k) +
                                  ": covariance not symmetric positive definite");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > weight_tol) {
    throw std::invalid_argument("mixture weights sum to " + std::to_string(total) + ", not 1");
  }
}

double mixture_pdf(const Mixture& m, const Vec2& x) {
  double p = 0.0;
  for (const auto& c : m.components) p += c.weight * gaussian_pdf(c.mean, c.cov, x);
  return p;
}

double mixture_log_pdf(const Mixture& m, const Vec2& x) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double best = kNegInf;
  std::vector<double> terms;
  terms.reserve(m.components.size());
  for (const auto& c : m.components) {
    const double t = c.weight > 0.0 ? std::log(c.weight) + gaussian_log_pdf(c.mean, c.cov, x)
                                    : kNegInf;
    terms.push_back(t);
    best = std::max(best, t);
  }
  if (best == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

Mat2 regularize_covariance(const Mat2& cov, double eigen_floor) {
  const Mat2 sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat2> eig(sym);
  const Vec2 lambda = eig.eigenvalues().cwiseMax(eigen_floor);
  if (lambda == eig.eigenvalues()) return sym;
  const Mat2 out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

MatrixXd e_step(const Mixture& m, std::span<const Vec2> targets) {
  const int n_comp = m.size();
  MatrixXd gamma(static_cast<Eigen::Index>(targets.size()), n_comp);
  for (std::size_t n = 0; n < targets.size(); ++n) {
    double denom = 0.0;
    for (int k = 0; k < n_comp; ++k) {
      gamma(n, k) = m[k].weight * gaussian_pdf(m[k].mean, m[k].cov, targets[n]);
      denom += gamma(n, k);
    }
    if (denom > 0.0 && std::isfinite(denom)) {
      gamma.row(n) /= denom;
    } else {
      gamma.row(n).setConstant(1.0 / n_comp);
    }
  }
  return gamma;
}

double log_likelihood(const Mixture& m, std::span<const Vec2> targets) {
  double ll = 0.0;
  for (const auto& x : targets) ll += mixture_log_pdf(m, x);
  return ll;
}

LocalStats local_stats(std::span<const Vec2> owned, const MatrixXd& gamma, int k,
                       const Vec2& current_mu) {
  LocalStats s{ConsensusInput::passive(1), ConsensusInput::passive(2),
               ConsensusInput::passive(4)};
  if (owned.empty()) return s;
  if (gamma.rows() != static_cast<Eigen::Index>(owned.size()) || k < 0 || k >= gamma.cols()) {
    throw std::invalid_argument("local_stats: responsibility matrix does not match targets");
  }
  const double count = static_cast<double>(owned.size());
  const double mass = gamma.col(k).sum();
  s.weight.eta = count;
  s.weight.r(0) = mass / count;
  if (!(mass > 0.0)) return s;

  Vec2 first = Vec2::Zero();
  Mat2 second = Mat2::Zero();
  for (std::size_t n = 0; n < owned.size(); ++n) {
    const double g = gamma(static_cast<Eigen::Index>(n), k);
    first += g * owned[n];
    const Vec2 d = owned[n] - current_mu;
    second += g * d * d.transpose();
  }
  s.mean.eta = mass;
  s.mean.r = first / mass;
  s.covariance.eta = mass;
  s.covariance.r = Eigen::Map<const Eigen::Matrix<double, 4, 1>>(
      Eigen::Matrix<double, 2, 2, Eigen::RowMajor>(second / mass).data());
  return s;
}

Mixture centralized_em(std::span<const Vec2> targets, int iterations, const Mixture& init,
                       double covariance_floor, std::vector<double>* log_likelihoods) {
  if (targets.size() < static_cast<std::size_t>(init.size())) {
    throw ConfigError("centralized_em: fewer targets than components");
  }
  Mixture m = init;
  const double total = static_cast<double>(targets.size());
  for (int it = 0; it < iterations; ++it) {
    if (log_likelihoods) log_likelihoods->push_back(log_likelihood(m, targets));
    const MatrixXd gamma = e_step(m, targets);
    for (int k = 0; k < m.size(); ++k) {
      const double mass = gamma.col(k).sum();
      m[k].weight = mass / total;
      if (!(mass > 0.0)) continue;
      Vec2 mu = Vec2::Zero();
      for (std::size_t n = 0; n < targets.size(); ++n) {
        mu += gamma(static_cast<Eigen::Index>(n), k) * targets[n];
      }
      mu /= mass;
      Mat2 cov = Mat2::Zero();
      for (std::size_t n = 0; n < targets.size(); ++n) {
        const Vec2 d = targets[n] - mu;
        cov += gamma(static_cast<Eigen::Index>(n), k) * d * d.transpose();
      }
      m[k].mean = mu;
      m[k].cov = regularize_covariance(cov / mass, covariance_floor);
    }
  }
  if (log_likelihoods) log_likelihoods->push_back(log_likelihood(m, targets));
  return m;
}

std::vector<Vec2> TargetSet::owned_by(int agent) const {
  std::vector<Vec2> out;
  for (std::size_t n = 0; n < points.size(); ++n) {
    if (owner[n] == agent) out.push_back(points[n]);
  }
  return out;
}

int TargetSet::count_owned_by(int agent) const {
  return static_cast<int>(std::count(owner.begin(), owner.end(), agent));
}

Mixture initial_mixture(int components, const Arena& arena, std::mt19937_64& rng) {
  if (components < 1) throw ConfigError("need at least one mixture component");
  std::uniform_real_distribution<double> ux(arena.min.x(), arena.max.x());
  std::uniform_real_distribution<double> uy(arena.min.y(), arena.max.y());
  const double spread = arena.diagonal() / 4.0;
  Mixture m;
  for (int k = 0; k < components; ++k) {
    GaussianComponent c;
    c.weight = 1.0 / components;
    const double x = ux(rng);
    c.mean = Vec2(x, uy(rng));
    c.cov = spread * spread * Mat2::Identity();
    m.components.push_back(c);
  }
  return m;
}

const char* stream_name(Stream s) {
  switch (s) {
    case Stream::Weight:
      return "weight";
    case Stream::Mean:
      return "mean";
    case Stream::Covariance:
      return "covariance";
  }
  return "?";
}

namespace {

// Parameters an agent feeds its own E-step: consensus can leave weights
// slightly negative mid-run.
Mixture sanitized(const Mixture& m) {
  Mixture out = m;
  double total = 0.0;
  for (auto& c : out.components) {
    c.weight = std::max(c.weight, 0.0);
    total += c.weight;
  }
  for (auto& c : out.components) c.weight = total > 0.0 ? c.weight / total : 1.0 / out.size();
  return out;
}

Mat2 unflatten(const VectorXd& v) {
  Mat2 m;
  m << v(0), v(1), v(2), v(3);
  return m;
}

}  // namespace

DistributedEmResult distributed_em(const Graph& g, const TargetSet& targets, const Mixture& init,
                                   const DistributedEmOptions& options) {
  const int n_agents = g.size();
  const int n_comp = init.size();
  if (!is_connected(g)) throw ConfigError("distributed_em: communication graph is disconnected");
  if (options.loops < 1 || options.rounds < 1 || n_comp < 1) {
    throw ConfigError("distributed_em: T, L and N must be at least 1");
  }
  if (targets.owner.size() != targets.points.size()) {
    throw ConfigError("distributed_em: every target needs exactly one owner");
  }
  for (int o : targets.owner) {
    if (o < 0 || o >= n_agents) throw ConfigError("distributed_em: target owner is not a node");
  }
  if (targets.points.empty()) throw ConfigError("distributed_em: no targets");

  std::vector<std::vector<Vec2>> owned(n_agents);
  for (int i = 0; i < n_agents; ++i) owned[i] = targets.owned_by(i);

  ConsensusOptions copts;
  copts.delta_c = options.delta_c;
  copts.eta_scale = options.eta_scale > 0.0
                        ? options.eta_scale
                        : 1.0 / (options.delta_c * static_cast<double>(targets.points.size()));

  std::vector<Mixture> local(n_agents, init);
  // [stream][component][agent]
  std::vector<std::vector<std::vector<ConsensusState>>> states(3);
  const int dims[3] = {1, 2, 4};
  for (int s = 0; s < 3; ++s) {
    states[s].assign(n_comp, std::vector<ConsensusState>(n_agents, ConsensusState::zeros(dims[s])));
  }

  std::vector<MatrixXd> gamma(n_agents);
  std::vector<ConsensusInput> inputs(n_agents);

  auto run_stream = [&](int loop, int k, Stream stream) {
    auto& st = states[static_cast<int>(stream)][k];
    if (options.trace) {
      advance_consensus(g, inputs, st, options.rounds, copts,
                        [&](int round, std::span<const ConsensusState> s) {
                          options.trace(loop, k, stream, round, s);
                        });
    } else {
      advance_consensus(g, inputs, st, options.rounds, copts);
    }
    return std::span<const ConsensusState>(st);
  };

  for (int t = 0; t < options.loops; ++t) {
    for (int i = 0; i < n_agents; ++i) {
      if (!owned[i].empty()) gamma[i] = e_step(sanitized(local[i]), owned[i]);
    }
    for (int k = 0; k < n_comp; ++k) {
      std::vector<LocalStats> stats(n_agents, LocalStats{ConsensusInput::passive(1),
                                                         ConsensusInput::passive(2),
                                                         ConsensusInput::passive(4)});
      for (int i = 0; i < n_agents; ++i) {
        if (!owned[i].empty()) stats[i] = local_stats(owned[i], gamma[i], k, local[i][k].mean);
      }

      for (int i = 0; i < n_agents; ++i) inputs[i] = stats[i].weight;
      auto out = run_stream(t, k, Stream::Weight);
      for (int i = 0; i < n_agents; ++i) local[i][k].weight = out[i].y(0);

      for (int i = 0; i < n_agents; ++i) inputs[i] = stats[i].mean;
      out = run_stream(t, k, Stream::Mean);
      for (int i = 0; i < n_agents; ++i) local[i][k].mean = out[i].y;

      // Scatter about the freshly agreed mean.
      for (int i = 0; i < n_agents; ++i) {
        inputs[i] = owned[i].empty()
                        ? ConsensusInput::passive(4)
                        : local_stats(owned[i], gamma[i], k, local[i][k].mean).covariance;
      }
      out = run_stream(t, k, Stream::Covariance);
      for (int i = 0; i < n_agents; ++i) {
        local[i][k].cov = regularize_covariance(unflatten(out[i].y), options.covariance_floor);
      }
    }
  }

  DistributedEmResult result;
  for (auto& m : local) {
    double total = 0.0;
    for (auto& c : m.components) {
      c.weight = std::max(c.weight, 0.0);
      total += c.weight;
    }
    result.raw_weight_sums.push_back(total);
    for (auto& c : m.components) c.weight = total > 0.0 ? c.weight / total : 1.0 / n_comp;
  }
  result.estimates = std::move(local);
  return result;
}

}  // namespace gmmdeploy
