#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ftsolve/errors.hpp"

namespace ftsolve {

/// Oriented edge between two 1-based node ids; `head` receives +1 in the incidence matrix.
struct Edge {
  int head = 0;
  int tail = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected network with a fixed orientation per edge (list order is orientation order).
///
/// Construction rejects self-loops, out-of-range ids and repeated undirected
/// edges. Connectivity is a separate query: simulations require it, but a
/// disconnected network is still a valid value (e.g. for reporting errors).
class Network {
public:
  Network() = default;

  Network(int nodes, std::vector<Edge> edges) : nodes_(nodes), edges_(std::move(edges)) {
    if (nodes_ < 1) throw InputError("network needs at least one node, got " + std::to_string(nodes_));
    std::set<std::pair<int, int>> seen;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      const auto where = "edge " + std::to_string(k + 1) + " (" + std::to_string(e.head) + "," +
                         std::to_string(e.tail) + ")";
      if (e.head < 1 || e.head > nodes_ || e.tail < 1 || e.tail > nodes_)
        throw InputError(where + ": node id outside 1.." + std::to_string(nodes_));
      if (e.head == e.tail) throw InputError(where + ": self-loop");
      if (!seen.emplace(std::min(e.head, e.tail), std::max(e.head, e.tail)).second)
        throw InputError(where + ": duplicate undirected edge");
    }
  }

  int nodes() const noexcept { return nodes_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  friend bool operator==(const Network&, const Network&) = default;

  static Network path(int nodes) {
    std::vector<Edge> e;
    for (int i = 1; i < nodes; ++i) e.push_back({i, i + 1});
    return Network(nodes, std::move(e));
  }

  static Network ring(int nodes) {
    auto e = path(nodes).edges();
    if (nodes > 2) e.push_back({nodes, 1});
    return Network(nodes, std::move(e));
  }

  /// Node 1 is the hub.
  static Network star(int nodes) {
    std::vector<Edge> e;
    for (int i = 2; i <= nodes; ++i) e.push_back({1, i});
    return Network(nodes, std::move(e));
  }

private:
  int nodes_ = 1;
  std::vector<Edge> edges_;
};

/// m x |E| matrix with +1 at (head,k) and -1 at (tail,k).
inline Eigen::MatrixXd incidence_matrix(const Network& g) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(g.nodes(), static_cast<Eigen::Index>(g.edge_count()));
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto& e = g.edges()[k];
    h(e.head - 1, static_cast<Eigen::Index>(k)) = 1.0;
    h(e.tail - 1, static_cast<Eigen::Index>(k)) = -1.0;
  }
  return h;
}

/// Zero-based neighbor lists, sorted ascending.
inline std::vector<std::vector<int>> neighbor_sets(const Network& g) {
  std::vector<std::vector<int>> nbrs(static_cast<std::size_t>(g.nodes()));
  for (const auto& e : g.edges()) {
    nbrs[static_cast<std::size_t>(e.head - 1)].push_back(e.tail - 1);
    nbrs[static_cast<std::size_t>(e.tail - 1)].push_back(e.head - 1);
  }
  for (auto& n : nbrs) std::sort(n.begin(), n.end());
  return nbrs;
}

inline bool is_connected(const Network& g) {
  const auto nbrs = neighbor_sets(g);
  std::vector<char> seen(nbrs.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : nbrs[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == nbrs.size();
}

inline int max_degree(const Network& g) {
  int d = 0;
  for (const auto& n : neighbor_sets(g)) d = std::max(d, static_cast<int>(n.size()));
  return d;
}

} // namespace ftsolve
