#include "behc/qgraph.hpp"

#include <stdexcept>

namespace behc {

int QGraph::next(int q, int label) const {
  if (q < 0 || q >= num_nodes) throw std::out_of_range("QGraph::next: node " + std::to_string(q) + " out of range");
  if (label < 0 || label > 1) throw std::out_of_range("QGraph::next: label must be 0 or 1");
  int t = edge_[static_cast<size_t>(q)][static_cast<size_t>(label)];
  if (t < 0) throw std::logic_error("QGraph::next: missing edge at node " + std::to_string(q));
  return t;
}

QGraph build_graph(GraphKind kind, int N) {
  if (N < 0) throw std::invalid_argument("build_graph: N must be nonnegative");
  QGraph g;
  g.kind = kind;
  g.num_nodes = N + 1;
  g.edge_.resize(static_cast<size_t>(N) + 1);
  for (int q = 0; q <= N; ++q) {
    g.edge_[static_cast<size_t>(q)][1] = 0;
    g.edge_[static_cast<size_t>(q)][0] = (q < N) ? q + 1 : (kind == GraphKind::LowerBound ? 0 : N);
  }
  return g;
}

int walk(const QGraph& g, int start, const std::vector<int>& labels) {
  if (start < 0 || start >= g.num_nodes) throw std::out_of_range("walk: start node out of range");
  int q = start;
  for (int y : labels) q = g.next(q, y);
  return q;
}

std::vector<std::string> validate(const QGraph& g) {
  std::vector<std::string> bad;
  if (g.num_nodes <= 0) {
    bad.push_back("graph has no nodes");
    return bad;
  }
  if (g.edge_.size() != static_cast<size_t>(g.num_nodes)) {
    bad.push_back("edge table size does not match node count");
    return bad;
  }
  for (int q = 0; q < g.num_nodes; ++q) {
    for (int y = 0; y <= 1; ++y) {
      int t = g.edge_[static_cast<size_t>(q)][static_cast<size_t>(y)];
      if (t < 0)
        bad.push_back("node " + std::to_string(q) + " has out-degree below 2 (missing label " + std::to_string(y) + ")");
      else if (t >= g.num_nodes)
        bad.push_back("node " + std::to_string(q) + " label " + std::to_string(y) + " targets out-of-range node " + std::to_string(t));
    }
  }
  // reachability from node 0 over well-formed edges
  std::vector<char> seen(static_cast<size_t>(g.num_nodes), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int q = stack.back();
    stack.pop_back();
    for (int y = 0; y <= 1; ++y) {
      int t = g.edge_[static_cast<size_t>(q)][static_cast<size_t>(y)];
      if (t >= 0 && t < g.num_nodes && !seen[static_cast<size_t>(t)]) {
        seen[static_cast<size_t>(t)] = 1;
        stack.push_back(t);
      }
    }
  }
  for (int q = 0; q < g.num_nodes; ++q)
    if (!seen[static_cast<size_t>(q)]) bad.push_back("node " + std::to_string(q) + " unreachable from node 0");
  return bad;
}

}  // namespace behc
