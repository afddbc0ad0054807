#include "behc/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace behc {

HarvestParam make_harvest(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("make_harvest: eta must lie in [0,1]");
  return HarvestParam{eta};
}

int state_evolution(int s, int x, int e) {
  if (s < 0 || s > 1 || x < 0 || x > 1 || e < 0 || e > 1)
    throw std::invalid_argument("state_evolution: arguments must be binary");
  if (x > s) throw std::invalid_argument("state_evolution: x=1 requires a charged battery (s=1)");
  int v = s - x + e;
  return v > 1 ? 1 : v;
}

int strategy_f(int u_plus, int s) {
  if (u_plus < 0) throw std::invalid_argument("strategy_f: u_plus must be nonnegative");
  if (s < 0 || s > 1) throw std::invalid_argument("strategy_f: s must be binary");
  return (u_plus == 0) ? s : 0;
}

double noiseless_law(const HarvestParam& h, int s_plus, int x, int s) {
  if (s_plus < 0 || s_plus > 1 || x < 0 || x > 1 || s < 0 || s > 1)
    throw std::invalid_argument("noiseless_law: arguments must be binary");
  if (x > s) throw std::invalid_argument("noiseless_law: x=1 requires s=1");
  double p0 = (x == s) ? h.eta_bar() : 0.0;
  return (s_plus == 0) ? p0 : 1.0 - p0;
}

double modified_law(const HarvestParam& h, int N, int s_plus, int x, int s, int q) {
  if (q < 0 || q > N) throw std::invalid_argument("modified_law: q out of range");
  if (x == 0 && (q == N - 1 || q == N)) return (s_plus == 1) ? 1.0 : 0.0;
  return noiseless_law(h, s_plus, x, s);
}

int AuxSets::u_max(int q) const {
  if (q < 0 || q > N) throw std::out_of_range("AuxSets: node " + std::to_string(q) + " out of range");
  return (q < N) ? q : N;
}

std::vector<int> AuxSets::u_set(int q) const {
  std::vector<int> out;
  for (int u = 0; u <= u_max(q); ++u) out.push_back(u);
  return out;
}

std::vector<int> AuxSets::uplus_set(int u, int q) const {
  if (!contains_u(u, q)) throw std::out_of_range("AuxSets::uplus_set: u not admissible at node");
  if (q < N) return {0, u + 1};
  if (kind == GraphKind::LowerBound) return {0};
  return {0, 1};
}

bool AuxSets::contains_u(int u, int q) const { return u >= 0 && u <= u_max(q); }

bool AuxSets::contains_uplus(int u_plus, int u, int q) const {
  for (int v : uplus_set(u, q))
    if (v == u_plus) return true;
  return false;
}

AuxSets make_aux_sets(GraphKind kind, int N) {
  if (N < 0) throw std::invalid_argument("make_aux_sets: N must be nonnegative");
  return AuxSets{kind, N};
}

double marginal_pi(GraphKind kind, const HarvestParam& h, int N, int u, int q) {
  AuxSets aux{kind, N};
  if (!aux.contains_u(u, q)) throw std::out_of_range("marginal_pi: u not admissible at node");
  if (kind == GraphKind::UpperBound && q == N) return 0.0;
  return pow_int(h.eta_bar(), u + 1);
}

double pow_int(double base, int exp) {
  if (exp < 0) throw std::invalid_argument("pow_int: exponent must be nonnegative");
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}
double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binary_entropy: p must lie in [0,1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

DMC make_bsc(double crossover) {
  if (!(crossover >= 0.0 && crossover <= 1.0)) throw std::invalid_argument("make_bsc: crossover must lie in [0,1]");
  DMC d;
  d.p[0] = {1.0 - crossover, crossover};
  d.p[1] = {crossover, 1.0 - crossover};
  return d;
}

DMC make_dmc(double p_y1_given_x0, double p_y1_given_x1) {
  if (!(p_y1_given_x0 >= 0.0 && p_y1_given_x0 <= 1.0) || !(p_y1_given_x1 >= 0.0 && p_y1_given_x1 <= 1.0))
    throw std::invalid_argument("make_dmc: rows must be probability distributions");
  DMC d;
  d.p[0] = {1.0 - p_y1_given_x0, p_y1_given_x0};
  d.p[1] = {1.0 - p_y1_given_x1, p_y1_given_x1};
  return d;
}

}  // namespace behc
