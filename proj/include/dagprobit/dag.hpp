#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dagprobit/errors.hpp"
#include "dagprobit/rng.hpp"

namespace dagprobit {

using AdjacencyMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Kahn's algorithm; adj(i,j) != 0 means edge i -> j. Total function over
// square 0-diagonal matrices.
inline bool is_acyclic(const AdjacencyMatrix& adj) {
  const int q = static_cast<int>(adj.rows());
  std::vector<int> indegree(q, 0);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < q; ++i)
      if (adj(i, j)) ++indegree[j];
  std::vector<int> frontier;
  frontier.reserve(q);
  for (int j = 0; j < q; ++j)
    if (indegree[j] == 0) frontier.push_back(j);
  int removed = 0;
  while (!frontier.empty()) {
    const int u = frontier.back();
    frontier.pop_back();
    ++removed;
    for (int j = 0; j < q; ++j) {
      if (adj(u, j) && --indegree[j] == 0) frontier.push_back(j);
    }
  }
  return removed == q;
}

// Directed acyclic graph on q nodes. Node 0 is the latent response and is
// constrained to be a sink (no outgoing edges). Values are immutable after
// construction; operator application returns a fresh Dag.
class Dag {
 public:
  explicit Dag(int q) : q_(q), adj_(AdjacencyMatrix::Zero(q, q)) {
    if (q < 2) throw ValidationError("Dag: need at least 2 nodes");
  }

  static Dag from_adjacency(const AdjacencyMatrix& adj) {
    if (adj.rows() != adj.cols()) throw ValidationError("Dag: adjacency must be square");
    Dag d(static_cast<int>(adj.rows()));
    d.adj_ = adj;
    d.validate();
    return d;
  }

  int node_count() const { return q_; }
  bool has_edge(int i, int j) const { return adj_(i, j) != 0; }
  const AdjacencyMatrix& adjacency() const { return adj_; }

  int edge_count() const {
    int m = 0;
    for (int i = 0; i < q_; ++i)
      for (int j = 0; j < q_; ++j) m += adj_(i, j);
    return m;
  }

  // Ascending parent set of j.
  std::vector<int> parents(int j) const {
    check_node(j);
    std::vector<int> pa;
    for (int i = 0; i < q_; ++i)
      if (adj_(i, j)) pa.push_back(i);
    return pa;
  }

  // fa(j) = {j} union pa(j), with j first.
  std::vector<int> family(int j) const {
    std::vector<int> fa{j};
    const auto pa = parents(j);
    fa.insert(fa.end(), pa.begin(), pa.end());
    return fa;
  }

  void validate() const {
    for (int i = 0; i < q_; ++i)
      if (adj_(i, i)) throw ValidationError("Dag: self-loop at node " + std::to_string(i + 1));
    for (int i = 0; i < q_; ++i)
      for (int j = i + 1; j < q_; ++j)
        if (adj_(i, j) && adj_(j, i))
          throw ValidationError("Dag: both directions present between nodes " +
                                std::to_string(i + 1) + " and " + std::to_string(j + 1));
    for (int j = 0; j < q_; ++j)
      if (adj_(0, j)) throw ValidationError("Dag: node 1 must not have children");
    if (!is_acyclic(adj_)) throw ValidationError("Dag: graph contains a cycle");
  }

  friend bool operator==(const Dag& a, const Dag& b) {
    return a.q_ == b.q_ && a.adj_ == b.adj_;
  }

 private:
  friend Dag apply_operator(const Dag&, const struct Operator&);

  void check_node(int j) const {
    if (j < 0 || j >= q_)
      throw ValidationError("Dag: node index " + std::to_string(j) + " out of range");
  }

  int q_;
  AdjacencyMatrix adj_;
};

enum class OperatorKind { Insert, Delete, Reverse };

struct Operator {
  OperatorKind kind;
  int source;  // i of i -> j
  int target;  // j of i -> j

  friend bool operator==(const Operator& a, const Operator& b) {
    return a.kind == b.kind && a.source == b.source && a.target == b.target;
  }
};

inline std::string describe(const Operator& op) {
  const char* name = op.kind == OperatorKind::Insert   ? "Insert"
                     : op.kind == OperatorKind::Delete ? "Delete"
                                                       : "Reverse";
  return std::string(name) + "(" + std::to_string(op.source + 1) + "->" +
         std::to_string(op.target + 1) + ")";
}

namespace detail {

// Path u ~> v by DFS, optionally pretending edge (skip_i -> skip_j) is absent.
inline bool has_path(const AdjacencyMatrix& adj, int u, int v, int skip_i = -1,
                     int skip_j = -1) {
  const int q = static_cast<int>(adj.rows());
  std::vector<std::uint8_t> seen(q, 0);
  std::vector<int> stack{u};
  seen[u] = 1;
  while (!stack.empty()) {
    const int a = stack.back();
    stack.pop_back();
    if (a == v) return true;
    for (int b = 0; b < q; ++b) {
      if (!adj(a, b) || seen[b]) continue;
      if (a == skip_i && b == skip_j) continue;
      seen[b] = 1;
      stack.push_back(b);
    }
  }
  return false;
}

}  // namespace detail

// All operators whose application yields a valid Dag (acyclic, node 1 a
// sink). Inserts are enumerated per orientation over vacant pairs; the size
// of the returned list is |O^D|, so q(D'|D) = 1/|O^D|.
inline std::vector<Operator> enumerate_valid_operators(const Dag& dag) {
  const int q = dag.node_count();
  const auto& adj = dag.adjacency();
  std::vector<Operator> ops;
  ops.reserve(static_cast<std::size_t>(q) * q);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      if (!adj(i, j)) continue;
      ops.push_back({OperatorKind::Delete, i, j});
      // Reverse introduces j -> i; invalid when j is node 1 or when a path
      // i ~> j survives without the reversed edge.
      if (j != 0 && !detail::has_path(adj, i, j, i, j))
        ops.push_back({OperatorKind::Reverse, i, j});
    }
  }
  for (int i = 1; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      if (i == j || adj(i, j) || adj(j, i)) continue;
      if (!detail::has_path(adj, j, i)) ops.push_back({OperatorKind::Insert, i, j});
    }
  }
  return ops;
}

inline Dag apply_operator(const Dag& dag, const Operator& op) {
  const int i = op.source;
  const int j = op.target;
  const int q = dag.node_count();
  if (i < 0 || j < 0 || i >= q || j >= q || i == j)
    throw ValidationError("apply_operator: invalid node pair in " + describe(op));
  Dag out = dag;
  switch (op.kind) {
    case OperatorKind::Insert:
      if (dag.has_edge(i, j) || dag.has_edge(j, i))
        throw ValidationError("apply_operator: pair already occupied for " + describe(op));
      if (i == 0) throw ValidationError("apply_operator: node 1 cannot gain a child");
      out.adj_(i, j) = 1;
      break;
    case OperatorKind::Delete:
      if (!dag.has_edge(i, j))
        throw ValidationError("apply_operator: missing edge for " + describe(op));
      out.adj_(i, j) = 0;
      break;
    case OperatorKind::Reverse:
      if (!dag.has_edge(i, j))
        throw ValidationError("apply_operator: missing edge for " + describe(op));
      if (j == 0) throw ValidationError("apply_operator: node 1 cannot gain a child");
      out.adj_(i, j) = 0;
      out.adj_(j, i) = 1;
      break;
  }
  if (!is_acyclic(out.adj_))
    throw ValidationError("apply_operator: " + describe(op) + " creates a cycle");
  return out;
}

// Erdos-Renyi draw over the q(q-1)/2 parent-ordered slots (edges run from
// higher to lower index), each included independently with probability xi.
inline Dag random_dag(int q, double xi, Rng& rng) {
  if (!(xi > 0.0 && xi < 1.0)) throw ValidationError("random_dag: xi must lie in (0,1)");
  Dag d(q);
  AdjacencyMatrix adj = AdjacencyMatrix::Zero(q, q);
  for (int i = 1; i < q; ++i)
    for (int j = 0; j < i; ++j)
      if (rng.uniform() < xi) adj(i, j) = 1;
  return Dag::from_adjacency(adj);
}

inline double log_prior(const Dag& dag, double xi) {
  const int q = dag.node_count();
  const double m = static_cast<double>(dag.edge_count());
  const double slots = 0.5 * q * (q - 1);
  return m * std::log(xi) + (slots - m) * std::log1p(-xi);
}

// f(D')/f(D) for one operator application.
inline double prior_ratio(const Operator& op, double xi) {
  switch (op.kind) {
    case OperatorKind::Insert: return xi / (1.0 - xi);
    case OperatorKind::Delete: return (1.0 - xi) / xi;
    case OperatorKind::Reverse: return 1.0;
  }
  return 1.0;
}

// Headerless CSV of 0/1 integers, row i = source node i. Lines starting
// with '#' are skipped on input.
inline void save_adjacency_csv(std::ostream& os, const Dag& dag) {
  const auto& adj = dag.adjacency();
  for (int i = 0; i < dag.node_count(); ++i) {
    for (int j = 0; j < dag.node_count(); ++j) {
      if (j) os << ',';
      os << static_cast<int>(adj(i, j));
    }
    os << '\n';
  }
}

inline Dag load_adjacency_csv(std::istream& is) {
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<int> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell != "0" && cell != "1")
        throw IoError("adjacency CSV: expected 0/1, got '" + cell + "'");
      row.push_back(cell == "1" ? 1 : 0);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("adjacency CSV: empty input");
  const auto q = rows.size();
  AdjacencyMatrix adj(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    if (rows[i].size() != q) throw IoError("adjacency CSV: ragged or non-square matrix");
    for (std::size_t j = 0; j < q; ++j) adj(i, j) = static_cast<std::uint8_t>(rows[i][j]);
  }
  return Dag::from_adjacency(adj);
}

}  // namespace dagprobit
