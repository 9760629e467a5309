#include "gmmdeploy/network.hpp"

#include <deque>
#include <stdexcept>
#include <string>

namespace gmmdeploy {

Graph::Graph(const Eigen::MatrixXi& adjacency) : adj_(adjacency.cwiseAbs()) {
  if (adj_.rows() != adj_.cols()) {
    throw std::invalid_argument("adjacency matrix must be square");
  }
  const int n = size();
  neighbors_.resize(n);
  for (int i = 0; i < n; ++i) {
    if (adj_(i, i) != 0) {
      throw std::invalid_argument("adjacency diagonal must be zero (node " + std::to_string(i) + ")");
    }
    for (int j = 0; j < n; ++j) {
      if (adj_(i, j) > 1) {
        throw std::invalid_argument("adjacency entries must have magnitude 0 or 1");
      }
      if (adj_(i, j) != adj_(j, i)) {
        throw std::invalid_argument("adjacency must be symmetric (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      }
      if (adj_(i, j)) neighbors_[i].push_back(j);
    }
  }
}

Graph Graph::ring(int n) {
  Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n, n);
  if (n == 2) {
    a(0, 1) = a(1, 0) = 1;
  } else if (n > 2) {
    for (int i = 0; i < n; ++i) a(i, (i + 1) % n) = a((i + 1) % n, i) = 1;
  }
  return Graph(a);
}

Graph Graph::complete(int n) {
  Eigen::MatrixXi a = Eigen::MatrixXi::Ones(n, n);
  a.diagonal().setZero();
  return Graph(a);
}

Graph Graph::edgeless(int n) { return Graph(Eigen::MatrixXi::Zero(n, n)); }

const std::vector<int>& Graph::neighbors(int i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("node id " + std::to_string(i) + " out of range");
  return neighbors_[i];
}

namespace {

std::vector<int> bfs_depths(const Graph& g, int source) {
  std::vector<int> depth(g.size(), -1);
  std::deque<int> frontier{source};
  depth[source] = 0;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop_front();
    for (int w : g.neighbors(u)) {
      if (depth[w] < 0) {
        depth[w] = depth[u] + 1;
        frontier.push_back(w);
      }
    }
  }
  return depth;
}

}  // namespace

bool is_connected(const Graph& g) {
  if (g.size() == 0) return false;
  for (int d : bfs_depths(g, 0)) {
    if (d < 0) return false;
  }
  return true;
}

std::vector<int> neighbors(const Graph& g, int i) { return g.neighbors(i); }

int diameter(const Graph& g) {
  int best = 0;
  for (int s = 0; s < g.size(); ++s) {
    for (int d : bfs_depths(g, s)) {
      if (d < 0) return -1;
      best = std::max(best, d);
    }
  }
  return best;
}

}  // namespace gmmdeploy
