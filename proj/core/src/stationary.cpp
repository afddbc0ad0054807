#include "behc/stationary.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace behc {

namespace {

double step_residual(const Eigen::SparseMatrix<double>& tt, const Eigen::VectorXd& x, Eigen::VectorXd& next) {
  next.noalias() = tt * x;
  double s = next.sum();
  if (s > 0.0) next /= s;
  return (next - x).lpNorm<Eigen::Infinity>();
}

bool direct_solve(const Eigen::SparseMatrix<double>& tt, Eigen::VectorXd& out) {
  const int n = static_cast<int>(tt.rows());
  // (I - T^t) x = 0 with the last equation replaced by sum(x) = 1
  Eigen::SparseMatrix<double> a(n, n);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(tt.nonZeros()) + 2 * static_cast<size_t>(n));
  for (int k = 0; k < tt.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(tt, k); it; ++it)
      if (it.row() != n - 1) trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), -it.value());
  for (int j = 0; j < n; ++j) {
    if (j != n - 1) trips.emplace_back(j, j, 1.0);
    trips.emplace_back(n - 1, j, 1.0);
  }
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) return false;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd x = lu.solve(rhs);
  // one round of iterative refinement
  Eigen::VectorXd r = rhs - a * x;
  x += lu.solve(r);
  double s = x.sum();
  if (!(s > 0.0) || !x.allFinite()) return false;
  x /= s;
  if (x.minCoeff() < -1e-9) return false;
  out = x.cwiseMax(0.0);
  double s2 = out.sum();
  if (s2 > 0.0) out /= s2;
  return true;
}

}  // namespace

StationaryResult stationary_distribution(const Eigen::SparseMatrix<double>& tt, double tol, long max_iter,
                                         const Eigen::VectorXd* warm_start) {
  StationaryResult res;
  const int n = static_cast<int>(tt.rows());
  if (n == 0) return res;
  if (n == 1) {
    res.pi = Eigen::VectorXd::Ones(1);
    res.converged = true;
    return res;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  if (warm_start != nullptr && warm_start->size() == n && warm_start->allFinite() &&
      warm_start->minCoeff() >= 0.0 && warm_start->sum() > 0.0) {
    x = *warm_start / warm_start->sum();
  }
  Eigen::VectorXd next(n);
  double last_checkpoint = std::numeric_limits<double>::infinity();
  const long stall_window = 2000;

  long it = 0;
  for (; it < max_iter; ++it) {
    double r = step_residual(tt, x, next);
    x.swap(next);
    if (r <= tol) {
      res.pi = x;
      res.residual = r;
      res.iterations = static_cast<int>(it + 1);
      res.converged = true;
      return res;
    }
    if ((it + 1) % stall_window == 0) {
      // insufficient geometric progress: hand over to the direct solver
      if (r > 0.5 * last_checkpoint) break;
      last_checkpoint = r;
    }
  }

  Eigen::VectorXd direct;
  if (direct_solve(tt, direct)) {
    Eigen::VectorXd check = tt * direct;
    double r = (check - direct).lpNorm<Eigen::Infinity>();
    if (r <= 10 * tol || r <= (x - tt * x).lpNorm<Eigen::Infinity>()) {
      res.pi = direct;
      res.residual = r;
      res.iterations = static_cast<int>(it);
      res.converged = r <= 10 * tol;
      return res;
    }
  }

  res.pi = x;
  res.residual = (tt * x - x).lpNorm<Eigen::Infinity>();
  res.iterations = static_cast<int>(it);
  res.converged = res.residual <= tol;
  return res;
}

}  // namespace behc
