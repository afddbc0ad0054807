#pragma once

#include "behc/program.hpp"
#include "behc/qgraph.hpp"
#include "behc/stationary.hpp"

#include <Eigen/Sparse>

#include <limits>
#include <string>
#include <vector>

namespace behc {

// A noisy evaluation instance: the channel-state chain (S, U, Q) driven by a
// policy, a memoryless observation channel, and a Q-graph whose edges follow
// the output symbol. Two auxiliary-memory layouts are supported:
//   - ladder (u_cap < 0): u_set(q) = [0:q] with a forced attempt at the last
//     node; consistent only when the observation channel is noiseless, where
//     deliberate zeros always produce y = 0.
//   - saturating (u_cap >= 1): u in [0:u_cap] at every node, u+ in
//     {0, min(u+1, u_cap)}, all policy entries free; valid for any channel.
struct NoisyInstance {
  HarvestParam param{};
  DMC dmc{};
  QGraph graph{};  // LowerBound family; edges labeled by y
  AuxSets aux{};   // ladder sets of the graph (used when u_cap < 0)
  int u_cap = -1;

  int last_node() const { return graph.num_nodes - 1; }
  int u_max_at(int q) const { return u_cap < 0 ? aux.u_max(q) : u_cap; }
  bool forced_attempt(int q) const { return u_cap < 0 && q == last_node(); }
  // allowed u_plus values from (u, q); size 1 when the attempt is forced
  std::vector<int> uplus_at(int u, int q) const;
};

// Ladder layout; requires a noiseless dmc (P(y|x) = 1{y=x}).
NoisyInstance ladder_instance(double eta, const DMC& dmc, int num_nodes_minus_one);
// Saturating layout with |U| = u_cap + 1 everywhere.
NoisyInstance capped_instance(double eta, const DMC& dmc, int num_nodes_minus_one, int u_cap = 1);

Policy uniform_noisy_policy(const NoisyInstance& inst, double attempt_prob = 0.5);
void check_noisy_policy(const NoisyInstance& inst, const Policy& pol);

// Enumeration of the chain states (s, u, q).
class NoisyStates {
 public:
  explicit NoisyStates(const NoisyInstance& inst);
  int count() const { return count_; }
  int id(int s, int u, int q) const;
  struct State {
    int s = 0, u = 0, q = 0;
  };
  const std::vector<State>& states() const { return states_; }

 private:
  std::vector<int> offset_;
  std::vector<State> states_;
  int count_ = 0;
};

// Row-stochastic transition matrix over the states of NoisyStates.
Eigen::SparseMatrix<double, Eigen::RowMajor> transition_matrix(const NoisyInstance& inst, const Policy& pol);

// Stationary distribution of the chain; throws when the chain fails to reach
// a fixed point (reducibility under a boundary policy). warm_start, if given,
// only speeds up the iteration.
StationaryResult noisy_stationary(const NoisyInstance& inst, const Policy& pol,
                                  const Eigen::VectorXd* warm_start = nullptr);

struct BcjrResult {
  double residual = std::numeric_limits<double>::infinity();
  int excluded_pairs = 0;  // (q, y) pairs with vanishing mass, left out of the spread
  std::vector<std::string> notes;
};

// Maximum spread, over nodes reached by at least two (q, y) pairs and over
// (u+, s+), of the posterior P(u+, s+ | q, y); zero means the policy is
// invariant in the sense required for the rate to be a valid bound.
BcjrResult bcjr_residual(const NoisyInstance& inst, const Policy& pol, const Eigen::VectorXd& pi);

struct RateReport {
  double rate = 0.0;  // I(U+, U; Y | Q) in bits
  double bcjr = std::numeric_limits<double>::infinity();
  double stationary_residual = std::numeric_limits<double>::infinity();
  bool certified = false;  // bcjr <= 1e-8 and stationary residual <= 1e-12
  int excluded_pairs = 0;
  std::vector<std::string> notes;
};

RateReport rate(const NoisyInstance& inst, const Policy& pol);

struct SearchResult {
  RateReport report;
  Policy policy;
  bool certified_found = false;
  int restart = -1;           // restart index that produced the returned policy
  double best_rate_any = 0;   // best rate over every evaluated policy, certified or not
};

// Multi-start coordinate-wise golden-section ascent on rate - 1e4 * bcjr^2
// over a BSC(p), followed by a residual-repair pass. Deterministic given the
// seed. When no certified policy is found the best-rate report is returned
// with certified_found = false.
SearchResult search_bsc(double eta, double p, int num_nodes_minus_one, int restarts = 8,
                        unsigned long long seed = 1, int threads = 0);

}  // namespace behc
