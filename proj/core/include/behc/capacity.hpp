#pragma once

#include "behc/solver.hpp"

#include <string>
#include <vector>

namespace behc {

// Analytic gap bound psi(N) = max_{p in [0,1]} H2(p) / (N p + 1), located by
// golden-section search to an abscissa width of 1e-12.
double gap_bound(int num_nodes_minus_one);

// Convenience: build the program of the given kind and maximize it.
SolveResult solve_bound(GraphKind kind, double eta, int num_nodes_minus_one, const SolveOptions& opt = {});

struct CapacityOptions {
  bool minimal_n = false;  // refine the final N down to the smallest one meeting precision
  int max_nodes = 300;     // resource cap on the last node N
  SolveOptions solver;     // gap_tol is tightened to min(gap_tol, precision / 4)
};

struct CapacityResult {
  double eta = 0.0;
  double precision = 0.0;
  double value = 0.0;  // midpoint of [a_n, b_n]
  double a_n = 0.0;    // best certified lower bound across the solved node counts
  double b_n = 0.0;    // best certified upper bound across the solved node counts
  int last_node = 0;   // final N of the search (graph has N + 1 nodes); when the
                       // brackets come from different N, notes record which
  double psi = 0.0;    // analytic gap bound at the final N
  double wall_seconds = 0.0;
  bool achieved = false;  // b_n - a_n <= precision
  std::vector<std::string> notes;
};

CapacityResult compute_capacity(double eta, double precision, const CapacityOptions& opt = {});

// One capacity row per eta, rows computed concurrently (threads = 0 picks the
// hardware parallelism). Row order follows the input order.
std::vector<CapacityResult> table_sweep(const std::vector<double>& etas, double precision,
                                        const CapacityOptions& opt = {}, int threads = 0);

}  // namespace behc
