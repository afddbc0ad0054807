#include "behc/verify.hpp"

#include "behc/capacity.hpp"
#include "behc/model.hpp"
#include "behc/noisy.hpp"
#include "behc/program.hpp"
#include "behc/qgraph.hpp"
#include "behc/solver.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace behc {

bool VerifyReport::all_passed() const {
  for (const CheckResult& c : checks)
    if (!c.pass) return false;
  return true;
}

std::vector<std::string> verify_suites() { return {"qgraph", "model", "program", "solver", "noisy"}; }

namespace {

void add(VerifyReport& rep, const std::string& name, bool pass, const std::string& detail) {
  rep.checks.push_back(CheckResult{name, pass, detail});
}

template <class F>
void guarded(VerifyReport& rep, const std::string& name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    add(rep, name, false, std::string("exception: ") + e.what());
  }
}

Policy random_policy(GraphKind kind, int n, std::mt19937_64& eng, double lo, double hi) {
  Policy pol = uniform_policy(kind, n, 0.5);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (int q = 0; q <= n; ++q) {
    if (kind == GraphKind::LowerBound && q == n) continue;
    for (double& a : pol.attempt[static_cast<size_t>(q)]) a = dist(eng);
  }
  return pol;
}

void suite_qgraph(VerifyReport& rep) {
  guarded(rep, "qgraph.walk", [&rep]() {
    bool ok = true;
    std::string bad;
    for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
      for (int n : {0, 1, 2, 5, 60}) {
        const QGraph g = build_graph(kind, n);
        if (g.node_count() != n + 1) ok = false;
        for (int q = 0; q <= n; ++q) {
          if (g.next(q, 1) != 0) ok = false;
          if (q < n && g.next(q, 0) != q + 1) ok = false;
        }
        const int wrap = g.next(n, 0);
        if (kind == GraphKind::LowerBound && wrap != 0) ok = false;
        if (kind == GraphKind::UpperBound && wrap != n) ok = false;
        if (!ok && bad.empty()) bad = "N=" + std::to_string(n);
      }
    add(rep, "qgraph.walk", ok, ok ? "edges follow the reset/advance pattern" : ("mismatch at " + bad));
  });

  guarded(rep, "qgraph.aux_sets", [&rep]() {
    bool ok = true;
    for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
      for (int n : {0, 1, 4}) {
        const AuxSets aux = make_aux_sets(kind, n);
        for (int q = 0; q <= n; ++q) {
          const int want = q < n ? q : n;
          if (aux.u_max(q) != want) ok = false;
          for (int u = 0; u <= aux.u_max(q); ++u) {
            const std::vector<int> up = aux.uplus_set(u, q);
            if (q < n) {
              if (up.size() != 2 || up[0] != 0 || up[1] != u + 1) ok = false;
            } else if (kind == GraphKind::LowerBound) {
              if (up.size() != 1 || up[0] != 0) ok = false;
            } else {
              if (up.size() != 2 || up[0] != 0 || up[1] != 1) ok = false;
            }
          }
        }
      }
    add(rep, "qgraph.aux_sets", ok, "index alphabets and successor sets match the layout");
  });
}

void suite_model(VerifyReport& rep) {
  guarded(rep, "model.law_normalization", [&rep]() {
    bool ok = true;
    for (double eta : {0.1, 0.5, 0.9}) {
      const HarvestParam h = make_harvest(eta);
      for (int s = 0; s <= 1; ++s)
        for (int x = 0; x <= s; ++x) {
          double tot = 0.0;
          for (int sp = 0; sp <= 1; ++sp) tot += noiseless_law(h, sp, x, s);
          if (std::abs(tot - 1.0) > 1e-15) ok = false;
          for (int n : {1, 3})
            for (int q = 0; q <= n; ++q) {
              double mtot = 0.0;
              for (int sp = 0; sp <= 1; ++sp) mtot += modified_law(h, n, sp, x, s, q);
              if (std::abs(mtot - 1.0) > 1e-15) ok = false;
            }
        }
    }
    add(rep, "model.law_normalization", ok, "laws sum to one over the successor battery");
  });

  guarded(rep, "model.marginal_pi", [&rep]() {
    bool ok = true;
    const double eta = 0.35;
    const HarvestParam h = make_harvest(eta);
    const int n = 5;
    for (int q = 0; q <= n; ++q)
      for (int u = 0; u <= (q < n ? q : n); ++u) {
        const double lb = marginal_pi(GraphKind::LowerBound, h, n, u, q);
        if (std::abs(lb - std::pow(1.0 - eta, u + 1)) > 1e-15) ok = false;
        const double ub = marginal_pi(GraphKind::UpperBound, h, n, u, q);
        const double want = q == n ? 0.0 : std::pow(1.0 - eta, u + 1);
        if (std::abs(ub - want) > 1e-15) ok = false;
      }
    add(rep, "model.marginal_pi", ok, "battery marginals follow the geometric decay");
  });

  guarded(rep, "model.entropy", [&rep]() {
    const bool ok = binary_entropy(0.5) == 1.0 && binary_entropy(0.0) == 0.0 &&
                    binary_entropy(1.0) == 0.0 &&
                    std::abs(binary_entropy(0.11) - binary_entropy(0.89)) < 1e-15 &&
                    std::abs(binary_entropy(0.11) - 0.499915958164528) < 1e-12;
    add(rep, "model.entropy", ok, "H2 endpoints, symmetry, and a spot value");
  });
}

void suite_program(VerifyReport& rep) {
  guarded(rep, "program.row_counts", [&rep]() {
    bool ok = true;
    std::string bad;
    for (int n = 0; n <= 60 && ok; ++n) {
      const HarvestParam h = make_harvest(0.5);
      const ConvexProgram lb = build_program(GraphKind::LowerBound, n, h);
      const long want_lb = 6L * n * n + 11L * n + 6L;
      if (lb.num_rows() != want_lb) {
        ok = false;
        bad = "lower N=" + std::to_string(n);
      }
      if (n >= 1) {
        const ConvexProgram ub = build_program(GraphKind::UpperBound, n, h);
        const long want_ub = 6L * n * n + 13L * n + 8L;
        if (ub.num_rows() != want_ub) {
          ok = false;
          bad = "upper N=" + std::to_string(n);
        }
      }
    }
    add(rep, "program.row_counts", ok,
        ok ? "row totals match the closed forms for N in [0:60]" : ("mismatch at " + bad));
  });

  guarded(rep, "program.feasibility", [&rep]() {
    bool ok = true;
    double worst = 0.0;
    std::mt19937_64 eng(7);
    for (int n : {1, 2, 5, 10})
      for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
        const HarvestParam h = make_harvest(0.4);
        const ConvexProgram prog = build_program(kind, n, h);
        for (int rep_i = 0; rep_i < 3; ++rep_i) {
          const Policy pol = random_policy(kind, n, eng, 0.15, 0.85);
          const Eigen::VectorXd v = policy_to_joint(prog, pol);
          const double r = (prog.a * v - prog.b).cwiseAbs().maxCoeff();
          worst = std::max(worst, r);
          if (r > 1e-12) ok = false;
        }
      }
    std::ostringstream os;
    os << "max |Av-b| = " << worst;
    add(rep, "program.feasibility", ok, os.str());
  });

  guarded(rep, "program.policy_round_trip", [&rep]() {
    bool ok = true;
    double worst = 0.0;
    std::mt19937_64 eng(11);
    for (int n : {1, 3})
      for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound}) {
        const HarvestParam h = make_harvest(0.6);
        const ConvexProgram prog = build_program(kind, n, h);
        const Policy pol = random_policy(kind, n, eng, 0.2, 0.8);
        const Eigen::VectorXd v = policy_to_joint(prog, pol);
        const Policy back = joint_to_policy(prog, v).policy;
        for (int q = 0; q <= n; ++q)
          for (size_t u = 0; u < pol.attempt[static_cast<size_t>(q)].size(); ++u) {
            const double d = std::abs(pol.attempt[static_cast<size_t>(q)][u] -
                                      back.attempt[static_cast<size_t>(q)][u]);
            worst = std::max(worst, d);
            if (d > 1e-9) ok = false;
          }
      }
    std::ostringstream os;
    os << "max entry drift = " << worst;
    add(rep, "program.policy_round_trip", ok, os.str());
  });
}

void suite_solver(VerifyReport& rep) {
  guarded(rep, "solver.sandwich", [&rep]() {
    bool ok = true;
    std::string detail;
    for (GraphKind kind : {GraphKind::LowerBound, GraphKind::UpperBound})
      for (int n : {1, 3}) {
        const ConvexProgram prog = build_program(kind, n, make_harvest(0.5));
        const SolveResult res = maximize(prog);
        if (res.status != SolveStatus::Converged) ok = false;
        const double obj = objective(prog, res.v).value;
        if (!(res.certified_lower <= obj + 1e-9 && obj <= res.certified_upper + 1e-9)) ok = false;
        if (res.gap() > 1e-8) ok = false;
        for (size_t i = 1; i < res.trace.size(); ++i) {
          const double g0 = res.trace[i - 1].certified_upper - res.trace[i - 1].certified_lower;
          const double g1 = res.trace[i].certified_upper - res.trace[i].certified_lower;
          if (g1 > g0 + 1e-12) ok = false;
        }
      }
    add(rep, "solver.sandwich", ok, "certificates bracket the optimum and tighten monotonically");
  });

  guarded(rep, "solver.reference_point", [&rep]() {
    const SolveResult res = solve_bound(GraphKind::UpperBound, 0.9, 6);
    const double want = 0.884597;
    const bool ok =
        res.status == SolveStatus::Converged && std::abs(res.certified_upper - want) < 1e-4;
    std::ostringstream os;
    os << "upper(eta=0.9, N=6) = " << res.certified_upper;
    add(rep, "solver.reference_point", ok, os.str());
  });
}

void suite_noisy(VerifyReport& rep) {
  guarded(rep, "noisy.row_stochastic", [&rep]() {
    bool ok = true;
    double worst = 0.0;
    std::mt19937_64 eng(23);
    for (double p : {0.0, 0.15}) {
      const NoisyInstance inst = p == 0.0 ? ladder_instance(0.45, make_bsc(0.0), 4)
                                          : capped_instance(0.45, make_bsc(p), 4, 1);
      Policy pol = uniform_noisy_policy(inst, 0.5);
      std::uniform_real_distribution<double> dist(0.2, 0.8);
      for (int q = 0; q <= inst.last_node(); ++q) {
        if (inst.forced_attempt(q)) continue;
        for (double& a : pol.attempt[static_cast<size_t>(q)]) a = dist(eng);
      }
      const auto t = transition_matrix(inst, pol);
      for (int r = 0; r < t.rows(); ++r) {
        double tot = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(t, r); it; ++it)
          tot += it.value();
        worst = std::max(worst, std::abs(tot - 1.0));
        if (std::abs(tot - 1.0) > 1e-12) ok = false;
      }
    }
    std::ostringstream os;
    os << "max row-sum drift = " << worst;
    add(rep, "noisy.row_stochastic", ok, os.str());
  });

  guarded(rep, "noisy.noiseless_identity", [&rep]() {
    bool ok = true;
    double worst = 0.0;
    std::mt19937_64 eng(31);
    const int n = 3;
    const NoisyInstance inst = ladder_instance(0.5, make_bsc(0.0), n);
    const ConvexProgram prog = build_program(GraphKind::LowerBound, n, make_harvest(0.5));
    for (int i = 0; i < 5; ++i) {
      const Policy pol = random_policy(GraphKind::LowerBound, n, eng, 0.2, 0.8);
      const RateReport rr = rate(inst, pol);
      const double ov = objective(prog, policy_to_joint(prog, pol)).value;
      worst = std::max(worst, std::abs(rr.rate - ov));
      if (std::abs(rr.rate - ov) > 1e-10) ok = false;
      if (rr.bcjr > 1e-10) ok = false;
      if (!rr.certified) ok = false;
    }
    std::ostringstream os;
    os << "max |rate - objective| = " << worst;
    add(rep, "noisy.noiseless_identity", ok, os.str());
  });

  guarded(rep, "noisy.search_smoke", [&rep]() {
    const SearchResult sr = search_bsc(0.5, 0.1, 1, 2, 1, 1);
    const bool ok = sr.best_rate_any > 0.0 && sr.best_rate_any <= 1.0 - binary_entropy(0.1) + 1e-9;
    std::ostringstream os;
    os << "best rate = " << sr.best_rate_any << (sr.certified_found ? " (certified)" : " (uncertified)");
    add(rep, "noisy.search_smoke", ok, os.str());
  });
}

}  // namespace

VerifyReport run_verify(const std::string& suite) {
  VerifyReport rep;
  bool known = false;
  const bool all = suite == "all";
  if (all || suite == "qgraph") {
    suite_qgraph(rep);
    known = true;
  }
  if (all || suite == "model") {
    suite_model(rep);
    known = true;
  }
  if (all || suite == "program") {
    suite_program(rep);
    known = true;
  }
  if (all || suite == "solver") {
    suite_solver(rep);
    known = true;
  }
  if (all || suite == "noisy") {
    suite_noisy(rep);
    known = true;
  }
  if (!known) throw std::invalid_argument("run_verify: unknown suite '" + suite + "'");
  return rep;
}

}  // namespace behc
