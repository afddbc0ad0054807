#pragma once

#include <array>
#include <vector>

#include "behc/qgraph.hpp"

namespace behc {

// Energy-harvesting parameter. eta is the per-step recharge probability.
struct HarvestParam {
  double eta = 0.5;
  double eta_bar() const { return 1.0 - eta; }
};

HarvestParam make_harvest(double eta);  // throws unless 0 <= eta <= 1

// Battery update with a unit buffer: s' = min{s - x + e, 1}. Sending (x=1)
// requires a charged battery.
int state_evolution(int s, int x, int e);

// Input allowed by the battery: x in {0,1} with x <= s.
int strategy_f(int u_plus, int s);  // f(u+, s) = s * 1{u+ = 0}

// P(S+ = s_plus | X = x, S = s) for the noiseless channel: the battery
// recharges with probability eta whenever x == s, and stays full otherwise.
double noiseless_law(const HarvestParam& h, int s_plus, int x, int s);

// Boosted variant used by the upper-bound construction: entering the last
// node (a zero input at node N-1 or N) recharges with certainty.
double modified_law(const HarvestParam& h, int N, int s_plus, int x, int s, int q);

// Strategy-index alphabets per graph node. u counts steps since the last
// attempted transmission, so node q supports u in [0:q] below the last node
// and [0:N] at it; from (u,q) the next index is 0 (attempt) or u+1 (defer),
// with the lower-bound kind forcing an attempt at the last node.
struct AuxSets {
  GraphKind kind = GraphKind::LowerBound;
  int N = 0;

  int u_max(int q) const;                       // largest admissible u at node q
  std::vector<int> u_set(int q) const;          // [0 : u_max(q)]
  std::vector<int> uplus_set(int u, int q) const;
  bool contains_u(int u, int q) const;
  bool contains_uplus(int u_plus, int u, int q) const;
};

AuxSets make_aux_sets(GraphKind kind, int N);

// P(S = 0 | U = u, Q = q) in stationarity: eta_bar^(u+1), except 0 at the
// last node of the upper-bound construction, where entry recharges surely.
double marginal_pi(GraphKind kind, const HarvestParam& h, int N, int u, int q);

// eta_bar^(u+1) by repeated multiplication; u capped at 200 by callers.
double pow_int(double base, int exp);
// H2(p) in bits with the 0 log 0 = 0 convention; throws outside [0,1].
double binary_entropy(double p);

// Binary-input binary-output memoryless channel, rows indexed by x.
struct DMC {
  std::array<std::array<double, 2>, 2> p{};  // p[x][y]
  double operator()(int y, int x) const { return p[static_cast<size_t>(x)][static_cast<size_t>(y)]; }
};

DMC make_bsc(double crossover);             // throws unless 0 <= crossover <= 1
DMC make_dmc(double p_y1_given_x0, double p_y1_given_x1);

}  // namespace behc
