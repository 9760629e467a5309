#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gmmdeploy/consensus.hpp"
#include "gmmdeploy/gaussian.hpp"
#include "gmmdeploy/network.hpp"

namespace gmmdeploy {

/// Finite Gaussian mixture sum_k pi_k N(x | mu_k, Sigma_k). Used both for the
/// target-density estimate and the collective QoS of the service agents.
struct Mixture {
  std::vector<GaussianComponent> components;

  int size() const { return static_cast<int>(components.size()); }
  const GaussianComponent& operator[](int k) const { return components[k]; }
  GaussianComponent& operator[](int k) { return components[k]; }
};

/// Throws std::invalid_argument unless weights are in [0,1] and sum to 1,
/// and every covariance is symmetric positive definite.
void validate_mixture(const Mixture& m, double weight_tol = 1e-9);

double mixture_pdf(const Mixture& m, const Vec2& x);
/// log p(x) via log-sum-exp; -inf when every weighted term vanishes.
double mixture_log_pdf(const Mixture& m, const Vec2& x);

/// Symmetrize and clamp eigenvalues from below.
Mat2 regularize_covariance(const Mat2& cov, double eigen_floor);

/// Responsibilities gamma (|targets| x N). A row whose denominator underflows
/// to zero falls back to 1/N.
MatrixXd e_step(const Mixture& m, std::span<const Vec2> targets);

double log_likelihood(const Mixture& m, std::span<const Vec2> targets);

/// (eta, r) pairs for the weight, mean and covariance consensus streams of
/// one component, computed from an agent's own targets.
struct LocalStats {
  ConsensusInput weight;      // dim 1
  ConsensusInput mean;        // dim 2
  ConsensusInput covariance;  // dim 4, row-major
};

LocalStats local_stats(std::span<const Vec2> owned, const MatrixXd& gamma, int k,
                       const Vec2& current_mu);

/// Plain EM over all targets. `log_likelihoods`, when given, receives the
/// log-likelihood of the mixture before each iteration and after the last.
Mixture centralized_em(std::span<const Vec2> targets, int iterations, const Mixture& init,
                       double covariance_floor, std::vector<double>* log_likelihoods = nullptr);

/// Target positions and the active agent that detected each one.
struct TargetSet {
  std::vector<Vec2> points;
  std::vector<int> owner;

  std::vector<Vec2> owned_by(int agent) const;
  int count_owned_by(int agent) const;
};

struct Arena {
  Vec2 min{0.0, 0.0};
  Vec2 max{1.0, 1.0};

  double diagonal() const { return (max - min).norm(); }
  double scale() const { return (max - min).maxCoeff(); }
};

/// Shared deterministic initialization: means uniform over the arena,
/// covariances (diag/4)^2 I, uniform weights.
Mixture initial_mixture(int components, const Arena& arena, std::mt19937_64& rng);

enum class Stream { Weight = 0, Mean = 1, Covariance = 2 };
const char* stream_name(Stream s);

/// Observer for every consensus round of distributed EM.
using EmTrace =
    std::function<void(int loop, int component, Stream stream, int round,
                       std::span<const ConsensusState> states)>;

struct DistributedEmOptions {
  int loops{50};   // T
  int rounds{20};  // L
  double delta_c{0.05};
  /// <= 0 selects 1 / (delta_c * M).
  double eta_scale{0.0};
  double covariance_floor{1e-6};
  EmTrace trace;
};

struct DistributedEmResult {
  std::vector<Mixture> estimates;
  /// Sum of each agent's weights before the final renormalization.
  std::vector<double> raw_weight_sums;
};

/// Consensus-based distributed EM. Every agent starts from `init`; active
/// agents run the E-step on their own targets, then all agents run three
/// warm-started consensus streams per component.
DistributedEmResult distributed_em(const Graph& g, const TargetSet& targets, const Mixture& init,
                                   const DistributedEmOptions& options);

}  // namespace gmmdeploy
