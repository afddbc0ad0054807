#include <doctest.h>

#include "behc/qgraph.hpp"

#include <stdexcept>

using namespace behc;

TEST_SUITE("qgraph") {

TEST_CASE("edges follow the reset/advance pattern for both kinds") {
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
    for (int n : {0, 1, 2, 7, 40}) {
      const QGraph g = build_graph(kind, n);
      CHECK(g.node_count() == n + 1);
      CHECK(g.last_node() == n);
      for (int q = 0; q <= n; ++q) {
        CHECK(g.next(q, 1) == 0);
        if (q < n) CHECK(g.next(q, 0) == q + 1);
      }
      if (kind == GraphKind::LowerBound)
        CHECK(g.next(n, 0) == 0);  // wrap: a full run of zeros resets the counter
      else
        CHECK(g.next(n, 0) == n);  // self-loop: the boosted channel stays at the last node
    }
  }
}

TEST_CASE("next() rejects out-of-range arguments") {
  const QGraph g = build_graph(GraphKind::LowerBound, 3);
  CHECK_THROWS_AS(g.next(-1, 0), std::out_of_range);
  CHECK_THROWS_AS(g.next(4, 0), std::out_of_range);
  CHECK_THROWS_AS(g.next(0, 2), std::out_of_range);
}

TEST_CASE("walk follows labels and validates inputs") {
  const QGraph g = build_graph(GraphKind::LowerBound, 2);
  // zeros advance 0 -> 1 -> 2, then wrap, then a one resets
  CHECK(walk(g, 0, {0, 0}) == 2);
  CHECK(walk(g, 0, {0, 0, 0}) == 0);
  CHECK(walk(g, 1, {1}) == 0);
  CHECK(walk(g, 0, {}) == 0);
  CHECK_THROWS_AS(walk(g, 5, {0}), std::out_of_range);
  CHECK_THROWS_AS(walk(g, 0, {3}), std::out_of_range);

  const QGraph u = build_graph(GraphKind::UpperBound, 2);
  CHECK(walk(u, 0, {0, 0, 0, 0}) == 2);  // self-loop absorbs further zeros
}

TEST_CASE("validate passes built graphs and flags broken ones") {
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
    for (int n : {0, 1, 6}) CHECK(validate(build_graph(kind, n)).empty());

  QGraph broken = build_graph(GraphKind::LowerBound, 2);
  broken.edge_[1][0] = -1;  // missing edge
  CHECK_FALSE(validate(broken).empty());

  QGraph unreachable = build_graph(GraphKind::LowerBound, 2);
  // make node 2 unreachable by redirecting the only inbound edge
  unreachable.edge_[1][0] = 0;
  CHECK_FALSE(validate(unreachable).empty());
}

}  // TEST_SUITE
