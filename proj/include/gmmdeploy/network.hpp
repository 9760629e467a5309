#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace gmmdeploy {

/// Undirected communication graph given by a symmetric 0/1 adjacency matrix.
///
/// Entries are read by magnitude, so a matrix printed with -1 marking edges
/// is accepted and stored as 1.
class Graph {
 public:
  Graph() = default;
  explicit Graph(const Eigen::MatrixXi& adjacency);

  static Graph ring(int n);
  static Graph complete(int n);
  static Graph edgeless(int n);

  int size() const { return static_cast<int>(adj_.rows()); }
  bool adjacent(int i, int j) const { return adj_(i, j) != 0; }
  const Eigen::MatrixXi& adjacency() const { return adj_; }
  const std::vector<int>& neighbors(int i) const;

 private:
  Eigen::MatrixXi adj_;
  std::vector<std::vector<int>> neighbors_;
};

bool is_connected(const Graph& g);

/// Sorted neighbor ids of node i; throws std::out_of_range for a bad id.
std::vector<int> neighbors(const Graph& g, int i);

/// Longest shortest-path length; -1 when the graph is disconnected.
int diameter(const Graph& g);

template <typename Payload>
struct Envelope {
  int from;
  Payload payload;
};

/// Per-node inboxes for one synchronous round.
template <typename Payload>
class RoundMailbox {
 public:
  explicit RoundMailbox(int n) : inboxes_(n) {}

  int size() const { return static_cast<int>(inboxes_.size()); }
  const std::vector<Envelope<Payload>>& inbox(int i) const { return inboxes_.at(i); }
  void deliver(int to, int from, const Payload& p) { inboxes_[to].push_back({from, p}); }

 private:
  std::vector<std::vector<Envelope<Payload>>> inboxes_;
};

/// Lockstep exchange: node i receives outgoing[j] from every neighbor j, in
/// increasing j. No loss, no reordering.
template <typename Payload>
RoundMailbox<Payload> sync_round(const Graph& g, const std::vector<Payload>& outgoing) {
  if (static_cast<int>(outgoing.size()) != g.size()) {
    throw std::invalid_argument("sync_round: need exactly one payload per node");
  }
  RoundMailbox<Payload> mail(g.size());
  for (int i = 0; i < g.size(); ++i) {
    for (int j : g.neighbors(i)) mail.deliver(i, j, outgoing[j]);
  }
  return mail;
}

}  // namespace gmmdeploy
