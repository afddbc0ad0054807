#include <doctest.h>

#include "behc/model.hpp"
#include "behc/program.hpp"
#include "behc/qgraph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

using namespace behc;

namespace {

Policy random_policy(GraphKind kind, int n, std::mt19937_64& eng, double lo, double hi) {
  Policy pol = uniform_policy(kind, n, 0.5);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int q = 0; q <= n; ++q) {
    if (kind == GraphKind::LowerBound && q == n) continue;
    for (double& a : pol.attempt[static_cast<size_t>(q)]) a = dist(eng);
  }
  return pol;
}

}  // namespace

TEST_SUITE("program") {

TEST_CASE("row totals match the closed forms") {
  const HarvestParam h = make_harvest(0.5);
  for (int n = 0; n <= 60; ++n) {
    const ConvexProgram lb = build_program(GraphKind::LowerBound, n, h);
    CHECK(lb.num_rows() == 6L * n * n + 11L * n + 6L);
    if (n >= 1) {
      const ConvexProgram ub = build_program(GraphKind::UpperBound, n, h);
      CHECK(ub.num_rows() == 6L * n * n + 13L * n + 8L);
    }
  }
}

TEST_CASE("single-node lower program retains exactly four tuples") {
  // Both battery values stay possible under the forced attempt at the single
  // node, each with two successor values, so the joint support has four
  // entries (not three).
  const ConvexProgram prog = build_program(GraphKind::LowerBound, 0, make_harvest(0.3));
  CHECK(prog.num_vars() == 4);
  for (int s = 0; s <= 1; ++s)
    for (int sp = 0; sp <= 1; ++sp) CHECK(prog.vars.find(0, 0, 0, s, sp) >= 0);
}

TEST_CASE("upper kind requires at least two nodes") {
  CHECK_THROWS_AS(build_program(GraphKind::UpperBound, 0, make_harvest(0.5)), std::invalid_argument);
}

TEST_CASE("retained tuples carry positive law factors and consistent groups") {
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
    const int n = 3;
    const ConvexProgram prog = build_program(kind, n, make_harvest(0.4));
    std::vector<int> seen(static_cast<size_t>(prog.num_vars()), 0);
    for (int q = 0; q <= n; ++q)
      for (int x = 0; x <= 1; ++x)
        for (int t : prog.groups[static_cast<size_t>(q)][static_cast<size_t>(x)]) {
          const VarTuple& vt = prog.vars.tuple(t);
          CHECK(vt.q == q);
          CHECK(strategy_f(vt.uplus, vt.s) == x);
          ++seen[static_cast<size_t>(t)];
        }
    for (int t = 0; t < prog.num_vars(); ++t) {
      CHECK(seen[static_cast<size_t>(t)] == 1);  // every variable in exactly one (q, x) group
      const VarTuple& vt = prog.vars.tuple(t);
      CHECK(law_value(kind, prog.param, n, vt.splus, strategy_f(vt.uplus, vt.s), vt.s, vt.q) > 0.0);
    }
  }
}

TEST_CASE("policies induce exactly feasible joints") {
  std::mt19937_64 eng(5);
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
    for (int n : {1, 2, 4}) {
      const ConvexProgram prog = build_program(kind, n, make_harvest(0.45));
      for (int rep = 0; rep < 3; ++rep) {
        const Policy pol = random_policy(kind, n, eng, 0.1, 0.9);
        const Eigen::VectorXd v = policy_to_joint(prog, pol);
        CHECK((prog.a * v - prog.b).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(v.minCoeff() >= 0.0);
        CHECK(std::abs(v.sum() - 1.0) <= 1e-12);
      }
    }
}

TEST_CASE("policy extraction inverts the joint construction") {
  std::mt19937_64 eng(11);
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
    for (int n : {1, 3}) {
      const ConvexProgram prog = build_program(kind, n, make_harvest(0.6));
      const Policy pol = random_policy(kind, n, eng, 0.2, 0.8);
      const Policy back = joint_to_policy(prog, policy_to_joint(prog, pol)).policy;
      for (int q = 0; q <= n; ++q)
        for (size_t u = 0; u < pol.attempt[static_cast<size_t>(q)].size(); ++u)
          CHECK(pol.attempt[static_cast<size_t>(q)][u] ==
                doctest::Approx(back.attempt[static_cast<size_t>(q)][u]).epsilon(1e-9));
    }
}

TEST_CASE("extraction reports unreachable strategy states") {
  // attempt probability one at node 0 starves every deeper node
  const int n = 2;
  const ConvexProgram prog = build_program(GraphKind::LowerBound, n, make_harvest(0.5));
  Policy pol = uniform_policy(GraphKind::LowerBound, n, 0.5);
  pol.attempt[0][0] = 1.0;
  const PolicyExtraction pe = joint_to_policy(prog, policy_to_joint(prog, pol));
  CHECK_FALSE(pe.zero_mass.empty());
  bool saw_node1 = false;
  for (const auto& [q, u] : pe.zero_mass)
    if (q == 1) {
      saw_node1 = true;
      CHECK(pe.policy.attempt[1][static_cast<size_t>(u)] == doctest::Approx(0.5));
    }
  CHECK(saw_node1);
}

TEST_CASE("stationary joint matches an independent dense-chain computation at N=1") {
  // Re-derive the joint pmf with a hand-rolled 6-state dense chain: states
  // (s, u, q) with q=0:u=0 and q=1:u in {0,1}; transitions choose u+ by the
  // policy, send x = s*1{u+=0}, draw s+ from the kind's law and follow the
  // x-labeled edge. This shares no code with policy_to_joint beyond the law.
  const double eta = 0.37;
  const HarvestParam h = make_harvest(eta);
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
    const int n = 1;
    const ConvexProgram prog = build_program(kind, n, h);
    const QGraph g = build_graph(kind, n);
    Policy pol = uniform_policy(kind, n, 0.3);
    if (kind == GraphKind::UpperBound) {
      pol.attempt[1][0] = 0.7;
      pol.attempt[1][1] = 0.55;
    }
    auto attempt_prob = [&](int u, int q) { return pol.attempt[static_cast<size_t>(q)][static_cast<size_t>(u)]; };
    auto law = [&](int sp, int x, int s, int q) { return law_value(kind, h, n, sp, x, s, q); };

    // state ids: (s,0,0)->s, (s,0,1)->2+s, (s,1,1)->4+s
    auto sid = [](int s, int u, int q) { return q == 0 ? s : 2 + 2 * u + s; };
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(6, 6);
    for (int q = 0; q <= 1; ++q)
      for (int u = 0; u <= (q == 0 ? 0 : 1); ++u)
        for (int s = 0; s <= 1; ++s) {
          std::vector<int> uplus = q < n ? std::vector<int>{0, u + 1}
                                         : (kind == GraphKind::LowerBound ? std::vector<int>{0}
                                                                          : std::vector<int>{0, 1});
          for (int up : uplus) {
            const double pp = uplus.size() == 1
                                  ? 1.0
                                  : (up == 0 ? attempt_prob(u, q) : 1.0 - attempt_prob(u, q));
            const int x = strategy_f(up, s);
            for (int sp = 0; sp <= 1; ++sp) {
              const double lw = law(sp, x, s, q);
              if (lw == 0.0) continue;
              T(sid(s, u, q), sid(sp, up, g.next(q, x))) += pp * lw;
            }
          }
        }
    for (int r = 0; r < 6; ++r) CHECK(T.row(r).sum() == doctest::Approx(1.0).epsilon(1e-14));

    // stationary pi: solve (T' - I) pi = 0 with a normalization row
    Eigen::MatrixXd A = T.transpose() - Eigen::MatrixXd::Identity(6, 6);
    A.row(5).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(6);
    rhs[5] = 1.0;
    const Eigen::VectorXd pi = A.fullPivLu().solve(rhs);

    const Eigen::VectorXd v = policy_to_joint(prog, pol);
    for (int t = 0; t < prog.num_vars(); ++t) {
      const VarTuple& vt = prog.vars.tuple(t);
      const bool forced = kind == GraphKind::LowerBound && vt.q == n;
      const double pp = forced ? 1.0
                               : (vt.uplus == 0 ? attempt_prob(vt.u, vt.q)
                                                : 1.0 - attempt_prob(vt.u, vt.q));
      const double want = pi[sid(vt.s, vt.u, vt.q)] * pp *
                          law(vt.splus, strategy_f(vt.uplus, vt.s), vt.s, vt.q);
      CHECK(v[t] == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("objective equals the direct entropy formula") {
  std::mt19937_64 eng(17);
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
    const int n = 3;
    const ConvexProgram prog = build_program(kind, n, make_harvest(0.55));
    const Policy pol = random_policy(kind, n, eng, 0.2, 0.8);
    const Eigen::VectorXd v = policy_to_joint(prog, pol);
    const ObjectiveEval f = objective(prog, v);
    REQUIRE_FALSE(f.boundary);
    double want = -prog.cost.dot(v);
    for (int q = 0; q <= n; ++q) {
      double g0 = 0.0, g1 = 0.0;
      for (int t : prog.groups[static_cast<size_t>(q)][0]) g0 += v[t];
      for (int t : prog.groups[static_cast<size_t>(q)][1]) g1 += v[t];
      const double gq = g0 + g1;
      if (gq > 0.0) want += gq * binary_entropy(g1 / gq);
    }
    CHECK(f.value == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("objective flags vanished group mass as a boundary point") {
  const ConvexProgram prog = build_program(GraphKind::LowerBound, 1, make_harvest(0.5));
  Eigen::VectorXd v = Eigen::VectorXd::Constant(prog.num_vars(), 1.0 / prog.num_vars());
  for (int t : prog.groups[0][1]) v[t] = 0.0;  // kill the attempt group at node 0
  CHECK(objective(prog, v).boundary);
}

TEST_CASE("reduced and independent row sets have full rank") {
  for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
    for (int n : {1, 2, 3}) {
      const ConvexProgram prog = build_program(kind, n, make_harvest(0.35));
      const std::vector<int> reduced = reduced_row_set(prog);
      const std::vector<int> indep = independent_row_set(prog);
      CHECK(indep.size() <= reduced.size());
      CHECK(reduced.size() < static_cast<size_t>(prog.num_rows()));

      const Eigen::MatrixXd dense(prog.a);
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(indep.size()), dense.cols());
      for (size_t i = 0; i < indep.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = dense.row(indep[i]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu_sub(sub);
      Eigen::FullPivLU<Eigen::MatrixXd> lu_all(dense);
      // the independent subset is a row basis of the full system
      CHECK(lu_sub.rank() == static_cast<Eigen::Index>(indep.size()));
      CHECK(lu_all.rank() == static_cast<Eigen::Index>(indep.size()));
    }
}

TEST_CASE("export is deterministic and carries the advertised counts") {
  const ConvexProgram prog = build_program(GraphKind::UpperBound, 2, make_harvest(0.5));
  std::ostringstream s1, s2;
  export_program(prog, s1);
  export_program(prog, s2);
  CHECK(s1.str() == s2.str());
  std::ostringstream head;
  head << "behc-convex v1 kind=ub N=2 eta=" << 0.5 << " vars=" << prog.num_vars()
       << " rows=" << prog.num_rows();
  CHECK(s1.str().substr(0, s1.str().find('\n')).find("vars=" + std::to_string(prog.num_vars())) !=
        std::string::npos);
  CHECK(s1.str().substr(0, s1.str().find('\n')).find("rows=" + std::to_string(prog.num_rows())) !=
        std::string::npos);
}

TEST_CASE("variable indexing rejects boundary recharge rates") {
  CHECK_THROWS_AS(VarIndex::index_variables(GraphKind::LowerBound, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(VarIndex::index_variables(GraphKind::LowerBound, 2, 1.0), std::invalid_argument);
}

}  // TEST_SUITE
