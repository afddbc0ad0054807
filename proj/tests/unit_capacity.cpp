#include <doctest.h>

#include "behc/capacity.hpp"
#include "behc/model.hpp"

#include <cmath>
#include <stdexcept>

using namespace behc;

TEST_SUITE("capacity") {
  TEST_CASE("analytic gap bound: endpoints, decay, and a spot value") {
    // psi(0) = max H2(p) = 1, and the bound decays monotonically in N.
    CHECK(gap_bound(0) == doctest::Approx(1.0).scale(0).abs(1e-12));
    double prev = gap_bound(0);
    for (int n : {1, 2, 5, 10, 100, 1000}) {
      const double g = gap_bound(n);
      CHECK(g < prev);
      CHECK(g > 0.0);
      prev = g;
    }
    // Spot value checked against a high-resolution scan of H2(p) / (N p + 1).
    CHECK(gap_bound(10000) == doctest::Approx(0.00104328901138).scale(0).abs(1e-9));
    CHECK_THROWS_AS(gap_bound(-1), std::invalid_argument);
  }

  TEST_CASE("endpoint harvest rates need no optimization") {
    const CapacityResult dead = compute_capacity(0.0, 1e-6);
    CHECK(dead.value == 0.0);
    CHECK(dead.a_n == 0.0);
    CHECK(dead.b_n == 0.0);
    CHECK(dead.achieved);

    const CapacityResult full = compute_capacity(1.0, 1e-6);
    CHECK(full.value == 1.0);
    CHECK(full.a_n == 1.0);
    CHECK(full.b_n == 1.0);
    CHECK(full.achieved);
  }

  TEST_CASE("capacity at eta = 0.5 is certified to the requested width") {
    CapacityOptions opt;
    // The driver tightens the per-solve gap tolerance to precision / 4 anyway;
    // a looser starting tolerance keeps this test fast.
    opt.solver.gap_tol = 2.5e-5;
    const CapacityResult res = compute_capacity(0.5, 1e-4, opt);
    CHECK(res.achieved);
    CHECK(res.b_n - res.a_n <= 1e-4);
    CHECK(res.value == doctest::Approx(0.5 * (res.a_n + res.b_n)).scale(0).abs(1e-15));
    // Independently certified value of the eta = 0.5 capacity: 0.611284868.
    CHECK(res.a_n <= 0.611284869);
    CHECK(res.b_n >= 0.611284867);
    CHECK(res.psi == doctest::Approx(gap_bound(res.last_node)).scale(0).abs(1e-15));
  }

  TEST_CASE("sweep rows agree with individual calls") {
    CapacityOptions opt;
    opt.solver.gap_tol = 2.5e-4;
    const std::vector<double> etas = {0.4, 0.6};
    const std::vector<CapacityResult> rows = table_sweep(etas, 1e-3, opt, 2);
    REQUIRE(rows.size() == 2);
    for (size_t i = 0; i < etas.size(); ++i) {
      const CapacityResult one = compute_capacity(etas[i], 1e-3, opt);
      CHECK(rows[i].eta == etas[i]);
      CHECK(rows[i].a_n == one.a_n);
      CHECK(rows[i].b_n == one.b_n);
      CHECK(rows[i].last_node == one.last_node);
      CHECK(rows[i].achieved);
    }
  }

  TEST_CASE("invalid arguments are rejected") {
    CHECK_THROWS_AS(compute_capacity(-0.1, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(compute_capacity(1.1, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(compute_capacity(0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(compute_capacity(0.5, -1e-3), std::invalid_argument);
    CHECK_THROWS_AS(solve_bound(GraphKind::UpperBound, 0.5, -1), std::invalid_argument);
  }

  TEST_CASE("solve_bound matches a direct build-and-maximize") {
    const SolveResult via = solve_bound(GraphKind::LowerBound, 0.7, 2);
    const SolveResult direct = maximize(build_program(GraphKind::LowerBound, 2, make_harvest(0.7)));
    CHECK(via.certified_lower == direct.certified_lower);
    CHECK(via.certified_upper == direct.certified_upper);
  }
}
