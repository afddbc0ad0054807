#pragma once

#include "behc/program.hpp"

#include <array>
#include <vector>

namespace behc {

struct GridResult {
  double best_value = 0.0;  // -inf when every grid point was skipped
  Policy best_policy;
  long evaluations = 0;
  long skipped = 0;  // grid points whose chain has no computable fixed point
  double resolution = 0.0;
};

// Exhaustive maximization of the lower-bound objective over the policy grid
// {0, resolution, 2*resolution, ..., 1} per free entry. Only meant for tiny
// node counts; N <= 2 is enforced.
GridResult grid_search_lb(double eta, int num_nodes_minus_one, double resolution);

struct SimConfig {
  long steps = 10000000;  // counted steps, split across the shards
  long burn_in = 100000;  // per shard, uncounted
  unsigned long long seed = 1;
  int shards = 8;   // fixed shard count keeps results independent of threads
  int threads = 0;  // 0 = hardware concurrency
};

struct SimResult {
  GraphKind kind = GraphKind::LowerBound;
  int last_node = 0;
  std::vector<std::vector<std::array<long, 2>>> counts;  // counts[q][u][s]
  long total = 0;

  long visits(int u, int q) const;
  double empirical_pi0(int u, int q) const;  // NaN when (u, q) was never visited
};

// Monte Carlo walk of the (S, U, Q) chain under pol (whose last_node fixes N),
// counting each visited state after burn-in. Deterministic given the seed.
SimResult simulate_chain(GraphKind kind, double eta, const Policy& pol, const SimConfig& cfg = {});

// Central-difference gradient of the program objective. h is clamped to
// [1e-8, 1e-5] and every component of v must exceed it, so the probe points
// stay inside the positive orthant.
Eigen::VectorXd finite_diff_gradient(const ConvexProgram& prog, const Eigen::VectorXd& v,
                                     double h = 1e-6);

}  // namespace behc
