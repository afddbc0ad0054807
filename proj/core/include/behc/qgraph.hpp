#pragma once

#include <array>
#include <string>
#include <vector>

namespace behc {

enum class GraphKind { LowerBound, UpperBound };

// Deterministic binary-labeled graph on nodes [0:N]: next(q,1) = 0 for every
// node; next(q,0) = q+1 below the last node. The two kinds differ only in the
// zero-edge of the last node (wrap to 0 vs self-loop).
struct QGraph {
  GraphKind kind = GraphKind::LowerBound;
  int num_nodes = 0;  // N + 1

  int node_count() const { return num_nodes; }
  int last_node() const { return num_nodes - 1; }

  int next(int q, int label) const;

  // edge_[q][label]; -1 marks a missing edge (only validate() tolerates it)
  std::vector<std::array<int, 2>> edge_;
};

QGraph build_graph(GraphKind kind, int N);

// Follows the labeled walk from `start`; throws on out-of-range input.
int walk(const QGraph& g, int start, const std::vector<int>& labels);

// Structural audit: per-node out-degree 2, targets in range, every node
// reachable from 0. Returns human-readable violations, empty when clean.
std::vector<std::string> validate(const QGraph& g);

}  // namespace behc
