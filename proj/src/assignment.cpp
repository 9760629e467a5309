#include "gmmdeploy/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

namespace gmmdeploy {

AssignmentLp build_problem(const MatrixXd& costs) {
  if (costs.rows() != costs.cols() || costs.rows() == 0) {
    throw std::invalid_argument("assignment cost matrix must be square and non-empty");
  }
  if (!costs.allFinite()) throw std::invalid_argument("assignment costs must be finite");
  const int n = static_cast<int>(costs.rows());
  AssignmentLp lp{{costs}, std::vector<std::vector<LpColumn>>(n), VectorXd::Ones(2 * n)};
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      LpColumn c{i, k, costs(i, k), VectorXd::Zero(2 * n)};
      c.incidence(i) = 1.0;
      c.incidence(n + k) = 1.0;
      lp.agent_columns[i].push_back(std::move(c));
    }
  }
  return lp;
}

bool AssignmentPlan::is_bijection() const {
  const int n = static_cast<int>(region_of_agent.size());
  std::vector<bool> seen(n, false);
  for (int k : region_of_agent) {
    if (k < 0 || k >= n || seen[k]) return false;
    seen[k] = true;
  }
  return true;
}

Eigen::MatrixXi AssignmentPlan::as_matrix() const {
  const int n = static_cast<int>(region_of_agent.size());
  Eigen::MatrixXi z = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) z(i, region_of_agent[i]) = 1;
  return z;
}

double AssignmentPlan::value(const MatrixXd& cost) const {
  double v = 0.0;
  for (std::size_t i = 0; i < region_of_agent.size(); ++i) {
    v += cost(static_cast<Eigen::Index>(i), region_of_agent[i]);
  }
  return v;
}

OracleSolution hungarian_oracle(const AssignmentProblem& p) {
  const int n = p.size();
  if (p.cost.cols() != n) throw std::invalid_argument("hungarian_oracle: cost must be square");
  // Shift to nonnegative; the optimal permutation is unchanged.
  const MatrixXd a = p.cost.array() - p.cost.minCoeff();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  OracleSolution out;
  out.plan.region_of_agent.assign(n, -1);
  for (int j = 1; j <= n; ++j) out.plan.region_of_agent[match[j] - 1] = j - 1;
  out.value = out.plan.value(p.cost);
  return out;
}

bool Basis::has_artificial() const {
  return std::any_of(columns.begin(), columns.end(),
                     [this](const BasisColumn& c) { return c.id >= n * n; });
}

std::vector<int> Basis::ids() const {
  std::vector<int> out;
  for (const auto& c : columns) out.push_back(c.id);
  return out;
}

double big_m_for(int n, double max_abs_cost) { return 1.0 + 2.0 * n * (1.0 + max_abs_cost); }

namespace {

struct DenseColumn {
  int id;
  double cost;
  int row_a;  // -1 when absent
  int row_b;
};

// Rows 0..N-1 are agent constraints, N..2N-2 the first N-1 region constraints.
DenseColumn dense_column(int n, int id, double cost) {
  const int rows = 2 * n - 1;
  if (id >= n * n) return {id, cost, id - n * n, -1};
  const int i = id / n;
  const int k = id % n;
  const int region_row = n + k;
  return {id, cost, i, region_row < rows ? region_row : -1};
}

double entry(const DenseColumn& c, int r) { return (r == c.row_a || r == c.row_b) ? 1.0 : 0.0; }

}  // namespace

Basis lex_simplex_columns(int n, std::span<const LpColumn> columns, double big_m,
                          const Basis* warm) {
  if (n < 1) throw std::invalid_argument("lex_simplex: N must be positive");
  const int rows = 2 * n - 1;

  std::map<int, double> cost_by_id;
  for (const auto& c : columns) {
    if (c.n() != n) throw std::invalid_argument("lex_simplex: column dimension mismatch");
    const auto [it, inserted] = cost_by_id.emplace(c.id(), c.cost);
    if (!inserted && it->second != c.cost) {
      throw std::invalid_argument("lex_simplex: column " + std::to_string(c.id()) +
                                  " supplied with two different costs");
    }
  }
  for (int r = 0; r < rows; ++r) cost_by_id.emplace(n * n + r, big_m);

  std::vector<DenseColumn> cols;
  std::map<int, int> pos_of_id;
  for (const auto& [id, cost] : cost_by_id) {
    pos_of_id[id] = static_cast<int>(cols.size());
    cols.push_back(dense_column(n, id, cost));
  }
  const int s = static_cast<int>(cols.size());

  std::vector<int> basis;  // positions into cols
  if (warm && warm->n == n && static_cast<int>(warm->columns.size()) == rows) {
    for (const auto& bc : warm->columns) {
      auto it = pos_of_id.find(bc.id);
      if (it == pos_of_id.end()) {
        basis.clear();
        break;
      }
      basis.push_back(it->second);
    }
  }
  if (basis.empty()) {
    for (int r = 0; r < rows; ++r) basis.push_back(pos_of_id.at(n * n + r));
  }

  const double cost_tol = 1e-11 * big_m;
  constexpr double kPivotTol = 1e-9;
  const VectorXd b = VectorXd::Ones(rows);
  std::vector<bool> is_basic(s, false);

  MatrixXd binv;
  VectorXd x;
  for (int iter = 0;; ++iter) {
    if (iter > 50 * s + 1000) throw NumericalError("lex_simplex: iteration limit reached");
    MatrixXd bmat = MatrixXd::Zero(rows, rows);
    VectorXd cb(rows);
    std::fill(is_basic.begin(), is_basic.end(), false);
    for (int r = 0; r < rows; ++r) {
      const auto& c = cols[basis[r]];
      for (int q = 0; q < rows; ++q) bmat(q, r) = entry(c, q);
      cb(r) = c.cost;
      is_basic[basis[r]] = true;
    }
    Eigen::PartialPivLU<MatrixXd> lu(bmat);
    binv = lu.inverse();
    x = binv * b;
    const VectorXd y = binv.transpose() * cb;  // simplex multipliers

    auto alpha_of = [&](const DenseColumn& c) {
      VectorXd a = VectorXd::Zero(rows);
      if (c.row_a >= 0) a += binv.col(c.row_a);
      if (c.row_b >= 0) a += binv.col(c.row_b);
      return a;
    };
    auto reduced_cost = [&](const DenseColumn& c) {
      double d = c.cost;
      if (c.row_a >= 0) d -= y(c.row_a);
      if (c.row_b >= 0) d -= y(c.row_b);
      return d;
    };

    // Entering column: most negative reduced cost; otherwise the first column
    // whose cost-perturbation term is lexicographically negative.
    int entering = -1;
    double best = -cost_tol;
    for (int j = 0; j < s; ++j) {
      if (is_basic[j]) continue;
      const double d = reduced_cost(cols[j]);
      if (d < best) {
        best = d;
        entering = j;
      }
    }
    if (entering < 0) {
      for (int j = 0; j < s && entering < 0; ++j) {
        if (is_basic[j] || std::abs(reduced_cost(cols[j])) > cost_tol) continue;
        const VectorXd a = alpha_of(cols[j]);
        int lead_row = -1;
        for (int r = 0; r < rows; ++r) {
          if (std::abs(a(r)) <= kPivotTol) continue;
          if (lead_row < 0 || cols[basis[r]].id < cols[basis[lead_row]].id) lead_row = r;
        }
        if (lead_row >= 0 && cols[basis[lead_row]].id < cols[j].id && a(lead_row) > 0.0) {
          entering = j;
        }
      }
    }
    if (entering < 0) break;

    // Lexicographic ratio test on rows of [x | B^-1] / alpha.
    const VectorXd a = alpha_of(cols[entering]);
    int leave = -1;
    for (int r = 0; r < rows; ++r) {
      if (a(r) <= kPivotTol) continue;
      if (leave < 0) {
        leave = r;
        continue;
      }
      int cmp = 0;
      const double lhs0 = x(r) / a(r), rhs0 = x(leave) / a(leave);
      if (std::abs(lhs0 - rhs0) > kPivotTol) cmp = lhs0 < rhs0 ? -1 : 1;
      for (int q = 0; q < rows && cmp == 0; ++q) {
        const double lhs = binv(r, q) / a(r), rhs = binv(leave, q) / a(leave);
        if (std::abs(lhs - rhs) > kPivotTol) cmp = lhs < rhs ? -1 : 1;
      }
      if (cmp < 0) leave = r;
    }
    if (leave < 0) throw NumericalError("lex_simplex: unbounded direction (malformed problem)");
    basis[leave] = entering;
  }

  Basis out;
  out.n = n;
  out.big_m = big_m;
  for (int r = 0; r < rows; ++r) {
    const auto& c = cols[basis[r]];
    double level = x(r);
    if (std::abs(level - std::round(level)) < 1e-9) level = std::round(level);
    out.columns.push_back({c.id, c.cost, level});
  }
  std::sort(out.columns.begin(), out.columns.end(),
            [](const BasisColumn& l, const BasisColumn& r) { return l.id < r.id; });
  for (const auto& c : out.columns) out.objective += c.cost * c.level;
  return out;
}

AssignmentPlan extract_assignment(const Basis& b) {
  const int n = b.n;
  AssignmentPlan plan;
  plan.region_of_agent.assign(n, -1);
  for (const auto& c : b.columns) {
    if (c.id >= n * n) throw std::logic_error("extract_assignment: artificial column in basis");
    if (std::abs(c.level) < 1e-9) continue;
    if (std::abs(c.level - 1.0) > 1e-9) {
      throw std::logic_error("extract_assignment: fractional basic variable " +
                             std::to_string(c.level));
    }
    const int i = c.id / n;
    if (plan.region_of_agent[i] != -1) {
      throw std::logic_error("extract_assignment: agent assigned twice");
    }
    plan.region_of_agent[i] = c.id % n;
  }
  if (!plan.is_bijection()) throw std::logic_error("extract_assignment: plan is not a bijection");
  return plan;
}

LexSimplexResult lex_simplex(const AssignmentProblem& p) {
  const AssignmentLp lp = build_problem(p.cost);
  std::vector<LpColumn> all;
  for (const auto& cs : lp.agent_columns) all.insert(all.end(), cs.begin(), cs.end());
  const int n = p.size();
  LexSimplexResult r;
  r.basis = lex_simplex_columns(n, all, big_m_for(n, p.cost.cwiseAbs().maxCoeff()));
  r.plan = extract_assignment(r.basis);
  return r;
}

namespace {

LpColumn to_lp_column(int n, const BasisColumn& c) {
  LpColumn out{c.id / n, c.id % n, c.cost, VectorXd::Zero(2 * n)};
  out.incidence(out.owner) = 1.0;
  out.incidence(n + out.region) = 1.0;
  return out;
}

}  // namespace

DistributedSimplexResult distributed_simplex(const Graph& g,
                                             const std::vector<std::vector<LpColumn>>& local_columns,
                                             const DistributedSimplexOptions& options) {
  const int agents = g.size();
  if (!is_connected(g)) throw ConfigError("distributed_simplex: communication graph is disconnected");
  if (static_cast<int>(local_columns.size()) != agents) {
    throw ConfigError("distributed_simplex: need one column set per agent");
  }
  int n = -1;
  std::set<int> seen;
  for (const auto& cs : local_columns) {
    for (const auto& c : cs) {
      if (n < 0) n = c.n();
      if (c.n() != n) throw ConfigError("distributed_simplex: column dimension mismatch");
      if (!seen.insert(c.id()).second) {
        throw ConfigError("distributed_simplex: column sets overlap (column " +
                          std::to_string(c.id()) + ")");
      }
    }
  }
  if (n < 1 || static_cast<int>(seen.size()) != n * n) {
    throw ConfigError("distributed_simplex: column sets do not cover every (agent, region) pair");
  }

  const int diam = std::max(1, diameter(g));

  // Max-consensus on |C| so every agent derives the same big-M.
  std::vector<double> max_abs(agents, 0.0);
  for (int i = 0; i < agents; ++i) {
    for (const auto& c : local_columns[i]) max_abs[i] = std::max(max_abs[i], std::abs(c.cost));
  }
  for (int r = 0; r < diam; ++r) {
    const auto mail = sync_round(g, max_abs);
    for (int i = 0; i < agents; ++i) {
      for (const auto& env : mail.inbox(i)) max_abs[i] = std::max(max_abs[i], env.payload);
    }
  }

  DistributedSimplexResult out;
  out.big_m = big_m_for(n, max_abs[0]);
  out.bases.resize(agents);
  for (int i = 0; i < agents; ++i) {
    out.bases[i] = lex_simplex_columns(n, local_columns[i], big_m_for(n, max_abs[i]));
  }

  int stable = 0;
  while (stable < diam) {
    if (out.rounds >= options.max_rounds) {
      throw NumericalError("distributed_simplex: no agreement within round limit");
    }
    ++out.rounds;
    const auto mail = sync_round(g, out.bases);
    bool changed = false;
    std::vector<Basis> next(agents);
    for (int i = 0; i < agents; ++i) {
      std::vector<LpColumn> merged = local_columns[i];
      std::set<int> have;
      for (const auto& c : merged) have.insert(c.id());
      auto add_basis = [&](const Basis& b) {
        for (const auto& c : b.columns) {
          if (c.id < n * n && have.insert(c.id).second) merged.push_back(to_lp_column(n, c));
        }
      };
      add_basis(out.bases[i]);
      for (const auto& env : mail.inbox(i)) add_basis(env.payload);
      next[i] = lex_simplex_columns(n, merged, big_m_for(n, max_abs[i]), &out.bases[i]);
      changed = changed || next[i].ids() != out.bases[i].ids();
    }
    out.bases = std::move(next);
    stable = changed ? 0 : stable + 1;
  }
  return out;
}

}  // namespace gmmdeploy
