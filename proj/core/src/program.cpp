#include "behc/program.hpp"

#include "behc/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace behc {

namespace {

constexpr int kMaxLastNode = 4000;
constexpr long long kPack = 4096;

long long pack_key(int q, int u, int uplus, int s, int splus) {
  return (((q * kPack + u) * kPack + uplus) * 2 + s) * 2 + splus;
}

double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// (u, q) pair indexing shared by the induced chain and policy extraction.
struct PairIndex {
  std::vector<int> offset;
  int count = 0;
  explicit PairIndex(const AuxSets& aux) {
    offset.resize(static_cast<size_t>(aux.N) + 1, 0);
    for (int q = 0; q <= aux.N; ++q) {
      offset[static_cast<size_t>(q)] = count;
      count += aux.u_max(q) + 1;
    }
  }
  int id(int u, int q) const { return offset[static_cast<size_t>(q)] + u; }
};

// Law rows run over every admissible (q, u, u+, s, s+) with the battery known
// to be charged at the last node, in lexicographic order.
template <class F>
void for_each_law_row(const AuxSets& aux, F&& f) {
  for (int q = 0; q <= aux.N; ++q)
    for (int u = 0; u <= aux.u_max(q); ++u)
      for (int uplus : aux.uplus_set(u, q)) {
        const int s_lo = (q == aux.N) ? 1 : 0;
        for (int s = s_lo; s <= 1; ++s)
          for (int splus = 0; splus <= 1; ++splus) f(q, u, uplus, s, splus);
      }
}

}  // namespace

double law_value(GraphKind kind, const HarvestParam& param, int num_nodes_minus_one, int s_plus, int x, int s,
                 int q) {
  if (kind == GraphKind::LowerBound) return noiseless_law(param, s_plus, x, s);
  return modified_law(param, num_nodes_minus_one, s_plus, x, s, q);
}

bool tuple_retained(GraphKind kind, int num_nodes_minus_one, int q, int u, int uplus, int s, int splus) {
  const int n = num_nodes_minus_one;
  AuxSets aux = make_aux_sets(kind, n);
  if (!aux.contains_u(u, q)) throw std::out_of_range("tuple_retained: u not admissible at node");
  if (!aux.contains_uplus(uplus, u, q)) throw std::out_of_range("tuple_retained: u_plus not admissible");
  if (s < 0 || s > 1 || splus < 0 || splus > 1)
    throw std::invalid_argument("tuple_retained: s and s_plus must be binary");
  if (kind == GraphKind::UpperBound && q == n && s == 0) return false;  // battery surely full there
  const int x = strategy_f(uplus, s);
  return law_value(kind, HarvestParam{0.5}, n, splus, x, s, q) > 0.0;
}

VarIndex::VarIndex(GraphKind kind, int num_nodes_minus_one) : kind_(kind), n_(num_nodes_minus_one) {
  if (n_ < 0 || n_ >= kMaxLastNode)
    throw std::invalid_argument("VarIndex: last node must lie in [0, " + std::to_string(kMaxLastNode - 1) + "]");
  const AuxSets aux = make_aux_sets(kind_, n_);
  for (int q = 0; q <= n_; ++q)
    for (int u = 0; u <= aux.u_max(q); ++u)
      for (int uplus : aux.uplus_set(u, q))
        for (int s = 0; s <= 1; ++s)
          for (int splus = 0; splus <= 1; ++splus)
            if (tuple_retained(kind_, n_, q, u, uplus, s, splus)) {
              lookup_.emplace(pack_key(q, u, uplus, s, splus), size());
              tuples_.push_back(VarTuple{q, u, uplus, s, splus});
            }
}

VarIndex VarIndex::index_variables(GraphKind kind, int num_nodes_minus_one, double eta) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("index_variables: eta must lie strictly inside (0,1)");
  return VarIndex(kind, num_nodes_minus_one);
}

int VarIndex::find(int q, int u, int uplus, int s, int splus) const {
  if (q < 0 || q >= kPack || u < 0 || u >= kPack || uplus < 0 || uplus >= kPack) return -1;
  if (s < 0 || s > 1 || splus < 0 || splus > 1) return -1;
  auto it = lookup_.find(pack_key(q, u, uplus, s, splus));
  return it == lookup_.end() ? -1 : it->second;
}

int ConvexProgram::family_count(RowFamily f) const {
  int c = 0;
  for (RowFamily g : row_family)
    if (g == f) ++c;
  return c;
}

ConvexProgram build_program(GraphKind kind, int num_nodes_minus_one, const HarvestParam& param) {
  if (kind == GraphKind::UpperBound && num_nodes_minus_one == 0)
    throw std::invalid_argument("build_program: the single-node upper-bound construction is degenerate");
  ConvexProgram prog;
  prog.kind = kind;
  prog.last_node = num_nodes_minus_one;
  prog.param = param;
  prog.vars = VarIndex::index_variables(kind, num_nodes_minus_one, param.eta);
  const int n = prog.last_node;
  const int nvars = prog.vars.size();
  const AuxSets aux = make_aux_sets(kind, n);
  const QGraph graph = build_graph(kind, n);

  // Stationary rows: one per admissible triple (s~, u~, q~), lexicographic in
  // (q~, u~, s~); the upper-bound kind has no s~ = 0 row at the last node.
  std::vector<int> stat_offset(static_cast<size_t>(n) + 1, 0);
  int stat_count = 0;
  for (int q = 0; q <= n; ++q) {
    stat_offset[static_cast<size_t>(q)] = stat_count;
    const int per_u = (kind == GraphKind::UpperBound && q == n) ? 1 : 2;
    stat_count += (aux.u_max(q) + 1) * per_u;
  }
  auto stat_row_exists = [&](int s, int u, int q) {
    if (!aux.contains_u(u, q)) return false;
    if (kind == GraphKind::UpperBound && q == n && s == 0) return false;
    return true;
  };
  auto stat_row = [&](int s, int u, int q) {
    if (!stat_row_exists(s, u, q)) throw std::logic_error("build_program: no stationary row for triple");
    const int per_u = (kind == GraphKind::UpperBound && q == n) ? 1 : 2;
    return stat_offset[static_cast<size_t>(q)] + (per_u == 1 ? u : u * 2 + s);
  };

  int law_count = 0;
  for_each_law_row(aux, [&](int, int, int, int, int) { ++law_count; });

  int policy_count = 0;
  for (int q = 0; q <= n; ++q)
    for (int u = 0; u <= aux.u_max(q); ++u) policy_count += static_cast<int>(aux.uplus_set(u, q).size());

  const int nrows = stat_count + law_count + policy_count + 1;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(nvars) * 6 + static_cast<size_t>(nrows));

  // Stationary family: marginal of the current triple minus the inflow.
  for (int t = 0; t < nvars; ++t) {
    const VarTuple& tp = prog.vars.tuple(t);
    trips.emplace_back(stat_row(tp.s, tp.u, tp.q), t, 1.0);
    const int x = strategy_f(tp.uplus, tp.s);
    const int qn = graph.next(tp.q, x);
    if (stat_row_exists(tp.splus, tp.uplus, qn)) {
      trips.emplace_back(stat_row(tp.splus, tp.uplus, qn), t, -1.0);
    } else if (n != 0) {
      // only the degenerate single-node upper-bound construction lands here
      throw std::logic_error("build_program: transition into a missing stationary row");
    }
  }

  // Channel-law family: v_t = P(s+ | x, s) * (mass of its (q, u, u+, s) group).
  int row = stat_count;
  for_each_law_row(aux, [&](int q, int u, int uplus, int s, int splus) {
    const int self = prog.vars.find(q, u, uplus, s, splus);
    if (self >= 0) trips.emplace_back(row, self, 1.0);
    const double law = law_value(kind, param, n, splus, strategy_f(uplus, s), s, q);
    if (law != 0.0)
      for (int sib = 0; sib <= 1; ++sib) {
        const int tcol = prog.vars.find(q, u, uplus, s, sib);
        if (tcol >= 0) trips.emplace_back(row, tcol, -law);
      }
    ++row;
  });

  // Policy family: the attempt decision is independent of the battery given
  // (u, q), whose empty-battery probability is pinned at marginal_pi.
  for (int q = 0; q <= n; ++q)
    for (int u = 0; u <= aux.u_max(q); ++u)
      for (int uplus : aux.uplus_set(u, q)) {
        const double pi0 = marginal_pi(kind, param, n, u, q);
        for (int s = 0; s <= 1; ++s)
          for (int splus = 0; splus <= 1; ++splus) {
            const int tcol = prog.vars.find(q, u, uplus, s, splus);
            if (tcol < 0) continue;
            const double coef = (s == 0 ? 1.0 : 0.0) - pi0;
            if (coef != 0.0) trips.emplace_back(row, tcol, coef);
          }
        ++row;
      }

  // Total-mass row.
  for (int t = 0; t < nvars; ++t) trips.emplace_back(row, t, 1.0);

  prog.a.resize(nrows, nvars);
  prog.a.setFromTriplets(trips.begin(), trips.end());
  prog.a.makeCompressed();

  prog.b = Eigen::VectorXd::Zero(nrows);
  prog.b[nrows - 1] = 1.0;

  prog.row_family.assign(static_cast<size_t>(nrows), RowFamily::Pmf);
  for (int r = 0; r < stat_count; ++r) prog.row_family[static_cast<size_t>(r)] = RowFamily::Stationary;
  for (int r = stat_count; r < stat_count + law_count; ++r) prog.row_family[static_cast<size_t>(r)] = RowFamily::Law;
  for (int r = stat_count + law_count; r < nrows - 1; ++r) prog.row_family[static_cast<size_t>(r)] = RowFamily::Policy;

  prog.groups.assign(static_cast<size_t>(n) + 1, {});
  prog.cost = Eigen::VectorXd::Zero(nvars);
  for (int t = 0; t < nvars; ++t) {
    const VarTuple& tp = prog.vars.tuple(t);
    const int x = strategy_f(tp.uplus, tp.s);
    prog.groups[static_cast<size_t>(tp.q)][static_cast<size_t>(x)].push_back(t);
    if (tp.uplus == 0) prog.cost[t] = binary_entropy(marginal_pi(kind, param, n, tp.u, tp.q));
  }
  return prog;
}

ObjectiveEval objective(const ConvexProgram& prog, const Eigen::VectorXd& v) {
  if (v.size() != prog.num_vars()) throw std::invalid_argument("objective: dimension mismatch");
  ObjectiveEval out;
  out.grad.resize(v.size());
  double value = 0.0;
  for (int q = 0; q <= prog.last_node; ++q) {
    const auto& g = prog.groups[static_cast<size_t>(q)];
    double g0 = 0.0, g1 = 0.0;
    for (int t : g[0]) g0 += v[t];
    for (int t : g[1]) g1 += v[t];
    const double gq = g0 + g1;
    value += xlog2x(gq) - xlog2x(g0) - xlog2x(g1);
    if ((!g[0].empty() && g0 <= 0.0) || (!g[1].empty() && g1 <= 0.0)) out.boundary = true;
    const double d0 = (g0 > 0.0 && gq > 0.0) ? std::log2(gq / g0) : std::numeric_limits<double>::infinity();
    const double d1 = (g1 > 0.0 && gq > 0.0) ? std::log2(gq / g1) : std::numeric_limits<double>::infinity();
    for (int t : g[0]) out.grad[t] = d0;
    for (int t : g[1]) out.grad[t] = d1;
  }
  out.value = value - prog.cost.dot(v);
  out.grad -= prog.cost;
  return out;
}

Policy uniform_policy(GraphKind kind, int num_nodes_minus_one, double attempt_prob) {
  if (!(attempt_prob >= 0.0 && attempt_prob <= 1.0))
    throw std::invalid_argument("uniform_policy: attempt probability must lie in [0,1]");
  const AuxSets aux = make_aux_sets(kind, num_nodes_minus_one);
  Policy pol;
  pol.kind = kind;
  pol.last_node = num_nodes_minus_one;
  pol.attempt.resize(static_cast<size_t>(num_nodes_minus_one) + 1);
  for (int q = 0; q <= num_nodes_minus_one; ++q) {
    const bool forced = kind == GraphKind::LowerBound && q == num_nodes_minus_one;
    pol.attempt[static_cast<size_t>(q)].assign(static_cast<size_t>(aux.u_max(q)) + 1,
                                               forced ? 1.0 : attempt_prob);
  }
  return pol;
}

void check_policy(const Policy& pol) {
  const AuxSets aux = make_aux_sets(pol.kind, pol.last_node);
  if (static_cast<int>(pol.attempt.size()) != pol.last_node + 1)
    throw std::invalid_argument("check_policy: one attempt row per node expected");
  for (int q = 0; q <= pol.last_node; ++q) {
    const auto& rowv = pol.attempt[static_cast<size_t>(q)];
    if (static_cast<int>(rowv.size()) != aux.u_max(q) + 1)
      throw std::invalid_argument("check_policy: attempt row has the wrong width at node " + std::to_string(q));
    for (double a : rowv)
      if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("check_policy: attempt probability outside [0,1]");
    if (pol.kind == GraphKind::LowerBound && q == pol.last_node)
      for (double a : rowv)
        if (a != 1.0) throw std::invalid_argument("check_policy: the last node forces an attempt");
  }
}

Eigen::VectorXd policy_to_joint(const ConvexProgram& prog, const Policy& pol) {
  check_policy(pol);
  if (pol.kind != prog.kind || pol.last_node != prog.last_node)
    throw std::invalid_argument("policy_to_joint: policy shape does not match the program");
  if (prog.kind == GraphKind::UpperBound && prog.last_node == 0)
    throw std::invalid_argument("policy_to_joint: the single-node upper-bound construction is degenerate");
  const int n = prog.last_node;
  const AuxSets aux = make_aux_sets(prog.kind, n);
  const QGraph graph = build_graph(prog.kind, n);
  const PairIndex pairs(aux);

  std::vector<Eigen::Triplet<double>> trips;
  for (int q = 0; q <= n; ++q)
    for (int u = 0; u <= aux.u_max(q); ++u) {
      const int src = pairs.id(u, q);
      const double pi0 = marginal_pi(prog.kind, prog.param, n, u, q);
      const auto ups = aux.uplus_set(u, q);
      const double a = pol.attempt[static_cast<size_t>(q)][static_cast<size_t>(u)];
      for (int uplus : ups) {
        const double pu = ups.size() == 1 ? 1.0 : (uplus == 0 ? a : 1.0 - a);
        if (pu == 0.0) continue;
        for (int s = 0; s <= 1; ++s) {
          const double ps = s == 0 ? pi0 : 1.0 - pi0;
          if (ps == 0.0) continue;
          const int qn = graph.next(q, strategy_f(uplus, s));
          if (!aux.contains_u(uplus, qn)) throw std::logic_error("policy_to_joint: inadmissible successor pair");
          trips.emplace_back(pairs.id(uplus, qn), src, pu * ps);
        }
      }
    }
  Eigen::SparseMatrix<double> tt(pairs.count, pairs.count);
  tt.setFromTriplets(trips.begin(), trips.end());
  const StationaryResult st = stationary_distribution(tt);
  if (!st.converged) {
    std::string msg =
        "policy_to_joint: stationary solve did not converge (residual " + std::to_string(st.residual) + ")";
    std::string corners;
    for (int q = 0; q <= n; ++q)
      for (int u = 0; u <= aux.u_max(q); ++u) {
        if (prog.kind == GraphKind::LowerBound && q == n) continue;  // structurally forced
        const double a = pol.attempt[static_cast<size_t>(q)][static_cast<size_t>(u)];
        if (a == 0.0 || a == 1.0)
          corners += (corners.empty() ? "" : ", ") + std::string("attempt(u=") + std::to_string(u) +
                     ",q=" + std::to_string(q) + ")=" + std::to_string(a);
      }
    if (!corners.empty()) msg += "; boundary policy entries: " + corners;
    throw std::runtime_error(msg);
  }

  Eigen::VectorXd v(prog.num_vars());
  for (int t = 0; t < prog.num_vars(); ++t) {
    const VarTuple& tp = prog.vars.tuple(t);
    const double pi0 = marginal_pi(prog.kind, prog.param, n, tp.u, tp.q);
    const double ps = tp.s == 0 ? pi0 : 1.0 - pi0;
    const auto ups = aux.uplus_set(tp.u, tp.q);
    const double a = pol.attempt[static_cast<size_t>(tp.q)][static_cast<size_t>(tp.u)];
    const double pu = ups.size() == 1 ? 1.0 : (tp.uplus == 0 ? a : 1.0 - a);
    const double law = law_value(prog.kind, prog.param, n, tp.splus, strategy_f(tp.uplus, tp.s), tp.s, tp.q);
    v[t] = st.pi[pairs.id(tp.u, tp.q)] * ps * pu * law;
  }
  const double total = v.sum();
  if (total > 0.0) v /= total;
  return v;
}

PolicyExtraction joint_to_policy(const ConvexProgram& prog, const Eigen::VectorXd& v) {
  if (v.size() != prog.num_vars()) throw std::invalid_argument("joint_to_policy: dimension mismatch");
  const int n = prog.last_node;
  const AuxSets aux = make_aux_sets(prog.kind, n);
  const PairIndex pairs(aux);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(pairs.count);
  Eigen::VectorXd attempt_mass = Eigen::VectorXd::Zero(pairs.count);
  for (int t = 0; t < prog.num_vars(); ++t) {
    const VarTuple& tp = prog.vars.tuple(t);
    mass[pairs.id(tp.u, tp.q)] += v[t];
    if (tp.uplus == 0) attempt_mass[pairs.id(tp.u, tp.q)] += v[t];
  }
  PolicyExtraction out;
  out.policy.kind = prog.kind;
  out.policy.last_node = n;
  out.policy.attempt.resize(static_cast<size_t>(n) + 1);
  for (int q = 0; q <= n; ++q) {
    auto& rowv = out.policy.attempt[static_cast<size_t>(q)];
    const bool forced = prog.kind == GraphKind::LowerBound && q == n;
    rowv.assign(static_cast<size_t>(aux.u_max(q)) + 1, forced ? 1.0 : 0.5);
    for (int u = 0; u <= aux.u_max(q); ++u) {
      const double m = mass[pairs.id(u, q)];
      if (m <= 0.0) {
        out.zero_mass.emplace_back(q, u);
        continue;  // keeps the 1/2 fallback (1 when forced)
      }
      if (forced) continue;
      rowv[static_cast<size_t>(u)] = std::clamp(attempt_mass[pairs.id(u, q)] / m, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<int> reduced_row_set(const ConvexProgram& prog) {
  const AuxSets aux = make_aux_sets(prog.kind, prog.last_node);
  std::vector<char> drop(static_cast<size_t>(prog.num_rows()), 0);
  int stat_count = 0;
  for (size_t r = 0; r < prog.row_family.size(); ++r)
    if (prog.row_family[r] == RowFamily::Stationary) ++stat_count;
  int row = stat_count;
  for_each_law_row(aux, [&](int, int, int, int, int splus) {
    // the s+ = 1 law row is the exact negation of its s+ = 0 partner
    if (splus == 1) drop[static_cast<size_t>(row)] = 1;
    ++row;
  });
  for (int r = 0; r < prog.num_rows(); ++r) {
    bool any = false;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(prog.a, r); it; ++it)
      if (it.value() != 0.0) {
        any = true;
        break;
      }
    if (!any) drop[static_cast<size_t>(r)] = 1;
  }
  std::vector<int> keep;
  for (int r = 0; r < prog.num_rows(); ++r)
    if (!drop[static_cast<size_t>(r)]) keep.push_back(r);
  return keep;
}

std::vector<int> independent_row_set(const ConvexProgram& prog) {
  const int n = prog.last_node;
  const AuxSets aux = make_aux_sets(prog.kind, n);
  std::vector<char> dependent(static_cast<size_t>(prog.num_rows()), 0);

  // Global flow identity: every retained tuple contributes +1 to its own
  // stationary row and -1 to its successor's, so the family sums to zero.
  // Mark the last stationary row.
  int stat_count = 0;
  for (size_t r = 0; r < prog.row_family.size(); ++r)
    if (prog.row_family[r] == RowFamily::Stationary) ++stat_count;
  if (stat_count > 0) dependent[static_cast<size_t>(stat_count - 1)] = 1;

  int law_count = 0;
  for_each_law_row(aux, [&](int, int, int, int, int) { ++law_count; });

  // Attempt-split rows already implied by the rest: for interior nodes the
  // deferral row of each (q, u) pair, and for the lower-bound last node its
  // forced-attempt rows. (Upper-bound last-node rows are empty and are gone
  // from the reduced set regardless.)
  int row = stat_count + law_count;
  for (int q = 0; q <= n; ++q)
    for (int u = 0; u <= aux.u_max(q); ++u)
      for (int uplus : aux.uplus_set(u, q)) {
        const bool interior_defer =
            q < n && uplus == u + 1 && (prog.kind == GraphKind::UpperBound || q >= 1);
        const bool lb_last = prog.kind == GraphKind::LowerBound && q == n && n >= 1;
        if (interior_defer || lb_last) dependent[static_cast<size_t>(row)] = 1;
        ++row;
      }

  std::vector<int> keep;
  for (int r : reduced_row_set(prog))
    if (!dependent[static_cast<size_t>(r)]) keep.push_back(r);
  return keep;
}

void export_program(const ConvexProgram& prog, std::ostream& out) {
  out << "behc-convex v1 kind=" << (prog.kind == GraphKind::LowerBound ? "lb" : "ub") << " N=" << prog.last_node
      << " eta=" << fmt17(prog.param.eta) << " vars=" << prog.num_vars() << " rows=" << prog.num_rows() << "\n";
  for (int r = 0; r < prog.num_rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(prog.a, r); it; ++it)
      if (it.value() != 0.0) out << r << " " << it.col() << " " << fmt17(it.value()) << "\n";
  for (int r = 0; r < prog.num_rows(); ++r)
    if (prog.b[r] != 0.0) out << "b " << r << " " << fmt17(prog.b[r]) << "\n";
  for (int q = 0; q <= prog.last_node; ++q)
    for (int x = 0; x <= 1; ++x) {
      out << "group " << q << " " << x;
      for (int t : prog.groups[static_cast<size_t>(q)][static_cast<size_t>(x)]) out << " " << t;
      out << "\n";
    }
  for (int t = 0; t < prog.num_vars(); ++t)
    if (prog.cost[t] != 0.0) out << "c " << t << " " << fmt17(prog.cost[t]) << "\n";
}

}  // namespace behc
