#include <doctest.h>

#include "behc/model.hpp"
#include "behc/oracle.hpp"
#include "behc/program.hpp"
#include "behc/solver.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace behc;

TEST_SUITE("oracle") {
  TEST_CASE("grid search brackets the solved single-segment optimum") {
    const GridResult grid = grid_search_lb(0.5, 1, 1e-3);
    CHECK(grid.evaluations > 0);
    const SolveResult res = solve_bound(GraphKind::LowerBound, 0.5, 1);
    REQUIRE(res.status == SolveStatus::Converged);
    // A 1e-3 grid cannot miss the smooth optimum by more than ~1e-4, and a
    // grid point can never beat the certified upper bound.
    CHECK(grid.best_value <= res.certified_upper + 1e-12);
    CHECK(grid.best_value >= res.certified_lower - 1e-4);
  }

  TEST_CASE("grid search rejects node counts beyond the tiny-case guard") {
    CHECK_THROWS_AS(grid_search_lb(0.5, 3, 1e-2), std::invalid_argument);
    CHECK_THROWS_AS(grid_search_lb(0.5, 1, 0.0), std::invalid_argument);
  }

  TEST_CASE("chain simulation is deterministic and conserves its step count") {
    const Policy pol = uniform_policy(GraphKind::LowerBound, 3, 0.5);
    SimConfig cfg;
    cfg.steps = 200000;
    cfg.burn_in = 2000;
    cfg.seed = 42;
    const SimResult a = simulate_chain(GraphKind::LowerBound, 0.4, pol, cfg);
    const SimResult b = simulate_chain(GraphKind::LowerBound, 0.4, pol, cfg);
    CHECK(a.total == cfg.steps);
    CHECK(b.total == cfg.steps);
    long sum = 0;
    for (size_t q = 0; q < a.counts.size(); ++q)
      for (size_t u = 0; u < a.counts[q].size(); ++u) {
        CHECK(a.counts[q][u][0] == b.counts[q][u][0]);
        CHECK(a.counts[q][u][1] == b.counts[q][u][1]);
        sum += a.counts[q][u][0] + a.counts[q][u][1];
      }
    CHECK(sum == a.total);
  }

  TEST_CASE("empirical battery marginal tracks the geometric law") {
    // Loose 4-sigma screen at a million steps; the acceptance run uses the
    // full-length walk with 3-sigma gates.
    const int n = 3;
    const Policy pol = uniform_policy(GraphKind::LowerBound, n, 0.5);
    SimConfig cfg;
    cfg.steps = 1000000;
    cfg.seed = 7;
    const SimResult sim = simulate_chain(GraphKind::LowerBound, 0.3, pol, cfg);
    for (int q = 0; q <= n; ++q)
      for (int u = 0; u <= make_aux_sets(GraphKind::LowerBound, n).u_max(q); ++u) {
        const long m = sim.visits(u, q);
        if (m < 1000) continue;  // too rare for a meaningful gate
        const double want = marginal_pi(GraphKind::LowerBound, make_harvest(0.3), n, u, q);
        const double got = sim.empirical_pi0(u, q);
        const double sigma = std::sqrt(std::max(want * (1.0 - want), 1e-12) / static_cast<double>(m));
        CAPTURE(q);
        CAPTURE(u);
        CHECK(std::abs(got - want) <= 4.0 * sigma + 1e-9);
      }
  }

  TEST_CASE("central differences confirm the analytic gradient") {
    std::mt19937_64 eng(2024);
    std::uniform_real_distribution<double> unif(0.35, 0.65);
    for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
      for (int n : {1, 2, 4}) {
        const ConvexProgram prog = build_program(kind, n, make_harvest(0.55));
        Policy pol = uniform_policy(kind, n, 0.5);
        for (auto& node : pol.attempt)
          for (auto& aEntry : node)
            if (aEntry != 1.0) aEntry = unif(eng);
        const Eigen::VectorXd v = policy_to_joint(prog, pol);
        REQUIRE(v.minCoeff() > 1e-7);
        const Eigen::VectorXd analytic = objective(prog, v).grad;
        const Eigen::VectorXd numeric = finite_diff_gradient(prog, v, 1e-7);
        const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
        CAPTURE(static_cast<int>(kind));
        CAPTURE(n);
        CHECK((analytic - numeric).cwiseAbs().maxCoeff() / scale <= 1e-6);
      }
  }

  TEST_CASE("finite differences reject probes that would leave the orthant") {
    const ConvexProgram prog = build_program(GraphKind::LowerBound, 1, make_harvest(0.5));
    Eigen::VectorXd v = Eigen::VectorXd::Constant(prog.num_vars(), 1e-9);
    CHECK_THROWS_AS(finite_diff_gradient(prog, v, 1e-6), std::invalid_argument);
  }
}
