#include <doctest.h>

#include "behc/model.hpp"
#include "behc/program.hpp"
#include "behc/solver.hpp"

#include <cmath>
#include <stdexcept>

using namespace behc;

namespace {

SolveResult solve(GraphKind kind, int n, double eta, const SolveOptions& opt = {}) {
  return maximize(build_program(kind, n, make_harvest(eta)), opt);
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("small programs converge with tight certificates") {
    for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
      for (int n : {1, 3}) {
        const ConvexProgram prog = build_program(kind, n, make_harvest(0.5));
        const SolveResult res = maximize(prog);
        CAPTURE(static_cast<int>(kind));
        CAPTURE(n);
        CHECK(res.status == SolveStatus::Converged);
        CHECK(res.gap() <= 1e-8);

        // The certificates must bracket the reported feasible objective.
        const double obj = objective(prog, res.v).value;
        CHECK(res.certified_lower <= obj + 1e-9);
        CHECK(obj <= res.certified_upper + 1e-9);
        CHECK(res.residual_primal <= 1e-10);

        // The running gap never widens from stage to stage.
        for (size_t i = 1; i < res.trace.size(); ++i) {
          const double g0 = res.trace[i - 1].certified_upper - res.trace[i - 1].certified_lower;
          const double g1 = res.trace[i].certified_upper - res.trace[i].certified_lower;
          CHECK(g1 <= g0 + 1e-12);
        }
      }
    }
  }

  TEST_CASE("optimum values match an independently validated baseline") {
    // These constants were cross-checked against an interior-point solver from
    // a separate convex-optimization stack on the exported program files.
    struct Row {
      GraphKind kind;
      int n;
      double eta;
      double value;
    };
    const Row rows[] = {
        {GraphKind::UpperBound, 6, 0.9, 0.884595645},
        {GraphKind::LowerBound, 6, 0.9, 0.874250693},
        {GraphKind::UpperBound, 11, 0.7, 0.743533467},
        {GraphKind::LowerBound, 11, 0.7, 0.742013086},
    };
    for (const Row& r : rows) {
      const SolveResult res = solve(r.kind, r.n, r.eta);
      CAPTURE(r.n);
      CAPTURE(r.eta);
      CHECK(res.status == SolveStatus::Converged);
      CHECK(res.gap() <= 1e-8);
      CHECK(res.certified_lower == doctest::Approx(r.value).epsilon(0).scale(0).abs(5e-8));
    }
  }

  TEST_CASE("trivial lower-bound program at a single node is solved exactly") {
    // With one node the walk emits u = 0 forever, so the rate is zero.
    const SolveResult res = solve(GraphKind::LowerBound, 0, 0.5);
    CHECK(res.status == SolveStatus::Converged);
    CHECK(res.certified_lower == doctest::Approx(0.0).scale(0).abs(1e-12));
    CHECK(res.certified_upper == doctest::Approx(0.0).scale(0).abs(1e-9));
  }

  TEST_CASE("deterministic: repeated solves agree bitwise") {
    const ConvexProgram prog = build_program(GraphKind::UpperBound, 4, make_harvest(0.35));
    const SolveResult a = maximize(prog);
    const SolveResult b = maximize(prog);
    CHECK(a.certified_lower == b.certified_lower);
    CHECK(a.certified_upper == b.certified_upper);
    CHECK(a.iterations == b.iterations);
    REQUIRE(a.v.size() == b.v.size());
    CHECK((a.v - b.v).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("a custom starting policy reaches the same optimum") {
    const ConvexProgram prog = build_program(GraphKind::LowerBound, 3, make_harvest(0.6));
    const SolveResult base = maximize(prog);
    Policy start = uniform_policy(GraphKind::LowerBound, 3, 0.75);
    const SolveResult fromStart = maximize(prog, start);
    CHECK(fromStart.status == SolveStatus::Converged);
    CHECK(fromStart.certified_lower == doctest::Approx(base.certified_lower).scale(0).abs(2e-9));
  }

  TEST_CASE("an unreachable gap tolerance fails honestly with valid brackets") {
    // At this size the dual certificate carries a floor of roughly 1e-6, so a
    // 1e-12 target cannot be met; the solver must say so rather than pretend.
    const ConvexProgram prog = build_program(GraphKind::LowerBound, 22, make_harvest(0.9));
    SolveOptions opt;
    opt.gap_tol = 1e-12;
    const SolveResult res = maximize(prog, opt);
    CHECK(res.status != SolveStatus::Converged);
    CHECK_FALSE(res.notes.empty());
    // Brackets stay valid even when the target is refused.
    CHECK(res.certified_lower <= res.certified_upper);
    CHECK(res.certified_lower == doctest::Approx(0.884594575).scale(0).abs(5e-6));
  }

  TEST_CASE("certificate helpers reject mismatched dimensions") {
    const ConvexProgram prog = build_program(GraphKind::LowerBound, 2, make_harvest(0.5));
    const Eigen::VectorXd good = policy_to_joint(prog, uniform_policy(GraphKind::LowerBound, 2, 0.5));
    Eigen::VectorXd shortV = Eigen::VectorXd::Constant(3, 0.1);
    Eigen::VectorXd shortY = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(certified_upper(prog, shortV, Eigen::VectorXd::Zero(prog.num_rows())),
                    std::invalid_argument);
    CHECK_THROWS_AS(certified_upper(prog, good, shortY), std::invalid_argument);
    CHECK_THROWS_AS(certified_lower(prog, shortV), std::invalid_argument);
  }

  TEST_CASE("certified bounds from any multiplier vector stay valid") {
    // The dual bound holds for an arbitrary y, not just the optimizer's.
    const ConvexProgram prog = build_program(GraphKind::UpperBound, 2, make_harvest(0.45));
    const SolveResult res = maximize(prog);
    REQUIRE(res.status == SolveStatus::Converged);
    const Eigen::VectorXd interior = policy_to_joint(prog, uniform_policy(GraphKind::UpperBound, 2, 0.5));
    const double with_zero_y = certified_upper(prog, interior, Eigen::VectorXd::Zero(prog.num_rows()));
    CHECK(with_zero_y >= res.certified_lower - 1e-12);
    const double with_solver_y = certified_upper(prog, interior, res.y);
    CHECK(with_solver_y >= res.certified_lower - 1e-12);
  }
}
