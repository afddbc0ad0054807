#pragma once

#include <Eigen/SparseCore>

namespace behc {

struct StationaryResult {
  Eigen::VectorXd pi;
  double residual = 0.0;  // max-norm of pi*T - pi
  int iterations = 0;
  bool converged = false;
};

// Stationary distribution of a row-stochastic chain, supplied transposed
// (tt(j,i) = P(i -> j)). Power iteration to `tol`, switching to a direct
// sparse solve of (I - T^t) with a normalization row when contraction stalls.
// A warm-start guess (any nonnegative vector with positive mass) may be
// supplied; it only affects the iteration count, never the fixed point.
StationaryResult stationary_distribution(const Eigen::SparseMatrix<double>& tt,
                                         double tol = 1e-14,
                                         long max_iter = 1000000,
                                         const Eigen::VectorXd* warm_start = nullptr);

}  // namespace behc
