#pragma once

#include <span>
#include <vector>

#include "gmmdeploy/network.hpp"
#include "gmmdeploy/types.hpp"

namespace gmmdeploy {

/// Square agent-by-region cost matrix. Entries may be negative.
struct AssignmentProblem {
  MatrixXd cost;

  int size() const { return static_cast<int>(cost.rows()); }
};

/// One LP column h_ik = [C_ik; A_ik], owned by agent i. The incidence A_ik
/// has length 2N with ones at i and N + k.
struct LpColumn {
  int owner{0};
  int region{0};
  double cost{0.0};
  VectorXd incidence;

  int n() const { return static_cast<int>(incidence.size() / 2); }
  /// Global column index i*N + k; fixes the lexicographic order.
  int id() const { return owner * n() + region; }
};

struct AssignmentLp {
  AssignmentProblem problem;
  std::vector<std::vector<LpColumn>> agent_columns;  // P^i
  VectorXd b;                                        // 1_{2N}
};

AssignmentLp build_problem(const MatrixXd& costs);

/// region_of_agent[i] = k  <=>  Z_ik = 1.
struct AssignmentPlan {
  std::vector<int> region_of_agent;

  bool is_bijection() const;
  Eigen::MatrixXi as_matrix() const;
  double value(const MatrixXd& cost) const;
  bool operator==(const AssignmentPlan&) const = default;
};

struct OracleSolution {
  AssignmentPlan plan;
  double value;
};

/// Kuhn-Munkres with potentials; exact optimum.
OracleSolution hungarian_oracle(const AssignmentProblem& p);

struct BasisColumn {
  int id;  // i*N + k for real columns, N*N + row for artificials
  double cost;
  double level;
  bool operator==(const BasisColumn&) const = default;
};

/// Simplex basis of the assignment LP in reduced form: the last region
/// constraint is implied by the others, so a basis has 2N - 1 columns.
/// Columns are kept sorted by id.
struct Basis {
  int n{0};
  double big_m{0.0};
  std::vector<BasisColumn> columns;
  double objective{0.0};

  bool has_artificial() const;
  std::vector<int> ids() const;
  bool operator==(const Basis&) const = default;
};

/// 1 + 2N (1 + max|C|).
double big_m_for(int n, double max_abs_cost);

/// Primal simplex over an arbitrary subset of the columns (artificials are
/// always added). Pivoting is lexicographic in both the ratio test and the
/// reduced-cost tie-break, which makes the returned optimal basis the unique
/// lexicographic optimum of the given column set. `warm` must be a basis
/// whose columns are all present (or artificial); otherwise the artificial
/// basis is used.
Basis lex_simplex_columns(int n, std::span<const LpColumn> columns, double big_m,
                          const Basis* warm = nullptr);

struct LexSimplexResult {
  Basis basis;
  AssignmentPlan plan;
};

LexSimplexResult lex_simplex(const AssignmentProblem& p);

/// Reads Z from the basic columns at level 1. Throws std::logic_error for an
/// artificial column, a fractional level, or a non-bijective result.
AssignmentPlan extract_assignment(const Basis& b);

struct DistributedSimplexOptions {
  int max_rounds{1000};
};

struct DistributedSimplexResult {
  std::vector<Basis> bases;  // per agent
  int rounds{0};
  double big_m{0.0};
};

/// Column-partitioned simplex over the communication graph. Each round every
/// agent broadcasts its basis, merges the received columns with its own
/// column set and re-solves. Stops once no basis changed for
/// max(1, diameter) consecutive rounds.
DistributedSimplexResult distributed_simplex(const Graph& g,
                                             const std::vector<std::vector<LpColumn>>& local_columns,
                                             const DistributedSimplexOptions& options = {});

}  // namespace gmmdeploy
