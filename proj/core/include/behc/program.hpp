#pragma once

#include "behc/model.hpp"
#include "behc/qgraph.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <iosfwd>
#include <unordered_map>
#include <utility>
#include <vector>

namespace behc {

// One retained entry of the joint pmf over (s, u, q, u_plus, s_plus).
// x = strategy_f(u_plus, s) and the successor node g(q, x) are implied.
struct VarTuple {
  int q = 0;
  int u = 0;
  int uplus = 0;
  int s = 0;
  int splus = 0;
};

// A tuple is retained iff its conditional law factor is structurally nonzero
// and, for the upper-bound kind, it does not sit on the surely-full battery
// event at the last node.
bool tuple_retained(GraphKind kind, int num_nodes_minus_one, int q, int u, int uplus, int s, int splus);

// Law factor P(s_plus | x, s) used by the program of the given kind.
double law_value(GraphKind kind, const HarvestParam& param, int num_nodes_minus_one, int s_plus, int x, int s,
                 int q);

class VarIndex {
 public:
  VarIndex() = default;
  VarIndex(GraphKind kind, int num_nodes_minus_one);

  // Retention is structural, but programs are only meaningful for 0 < eta < 1;
  // this entry point enforces that.
  static VarIndex index_variables(GraphKind kind, int num_nodes_minus_one, double eta);

  GraphKind kind() const { return kind_; }
  int last_node() const { return n_; }
  int size() const { return static_cast<int>(tuples_.size()); }
  const VarTuple& tuple(int t) const { return tuples_.at(static_cast<size_t>(t)); }
  const std::vector<VarTuple>& tuples() const { return tuples_; }
  // -1 when the tuple is pruned or out of range.
  int find(int q, int u, int uplus, int s, int splus) const;

 private:
  GraphKind kind_ = GraphKind::LowerBound;
  int n_ = 0;
  std::vector<VarTuple> tuples_;
  std::unordered_map<long long, int> lookup_;
};

enum class RowFamily { Stationary, Law, Policy, Pmf };

struct ConvexProgram {
  GraphKind kind = GraphKind::LowerBound;
  int last_node = 0;  // N; the graph has N + 1 nodes
  HarvestParam param{};
  VarIndex vars;
  Eigen::SparseMatrix<double, Eigen::RowMajor> a;  // num_rows x num_vars
  Eigen::VectorXd b;
  Eigen::VectorXd cost;  // linear part of the objective, in bits
  // groups[q][x]: columns whose tuple has node q and input x.
  std::vector<std::array<std::vector<int>, 2>> groups;
  std::vector<RowFamily> row_family;

  int num_vars() const { return static_cast<int>(a.cols()); }
  int num_rows() const { return static_cast<int>(a.rows()); }
  int family_count(RowFamily f) const;
};

ConvexProgram build_program(GraphKind kind, int num_nodes_minus_one, const HarvestParam& param);

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  bool boundary = false;  // some (q, x) mass vanished; grad is not finite there
};

// Objective in bits: sum_q G_q * H2(G_{q,1} / G_q) - cost' v.
ObjectiveEval objective(const ConvexProgram& prog, const Eigen::VectorXd& v);

// Node-conditional attempt probabilities: attempt[q][u] = P(u_plus = 0 | u, q).
// For the lower-bound kind the last node is a forced attempt, so attempt[N][u]
// must equal 1; the upper-bound kind keeps those entries free.
struct Policy {
  GraphKind kind = GraphKind::LowerBound;
  int last_node = 0;
  std::vector<std::vector<double>> attempt;
};

Policy uniform_policy(GraphKind kind, int num_nodes_minus_one, double attempt_prob = 0.5);
void check_policy(const Policy& pol);

// Stationary joint pmf induced by a policy; exact on the policy and law rows,
// with the stationary rows holding up to the chain solver tolerance.
Eigen::VectorXd policy_to_joint(const ConvexProgram& prog, const Policy& pol);

struct PolicyExtraction {
  Policy policy;
  // (q, u) pairs whose marginal mass vanished; their free attempt entries fall
  // back to 1/2 (a forced last-node entry stays 1).
  std::vector<std::pair<int, int>> zero_mass;
};

PolicyExtraction joint_to_policy(const ConvexProgram& prog, const Eigen::VectorXd& v);

// Rows that survive reduction for the solver: empty rows and the law rows with
// s_plus = 1 (exact negations of their s_plus = 0 partners) are dropped.
std::vector<int> reduced_row_set(const ConvexProgram& prog);

// Subset of reduced_row_set with full row rank. Two families of exact linear
// dependencies are removed: the global flow identity (stationary rows sum to
// zero because every retained tuple lands on a retained successor triple), and
// one attempt-split row per (q, u) pair whose battery marginal is already
// implied by the stationary and law rows. Membership is structural — it does
// not depend on eta.
std::vector<int> independent_row_set(const ConvexProgram& prog);

void export_program(const ConvexProgram& prog, std::ostream& out);

}  // namespace behc
