#include "behc/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace behc {

namespace {

constexpr double kSqrtLn2Inv = 1.2011224087864498;  // 1 / sqrt(ln 2)

struct GroupSums {
  Eigen::VectorXd g0, g1;
};

GroupSums group_sums(const ConvexProgram& prog, const Eigen::VectorXd& v) {
  const int nq = prog.last_node + 1;
  GroupSums gs{Eigen::VectorXd::Zero(nq), Eigen::VectorXd::Zero(nq)};
  for (int q = 0; q < nq; ++q) {
    for (int t : prog.groups[static_cast<size_t>(q)][0]) gs.g0[q] += v[t];
    for (int t : prog.groups[static_cast<size_t>(q)][1]) gs.g1[q] += v[t];
  }
  return gs;
}

// Square-root factor of the objective curvature: -hess(f0) = sum_q r_q r_q'
// with r_q supported on group q.
bool curvature_coefficients(const ConvexProgram& prog, const Eigen::VectorXd& v, Eigen::VectorXd& coef,
                            std::vector<int>& qcol) {
  const GroupSums gs = group_sums(prog, v);
  const int nq = prog.last_node + 1;
  coef.resize(v.size());
  for (int q = 0; q < nq; ++q) {
    const double g0 = gs.g0[q], g1 = gs.g1[q], gq = g0 + g1;
    const auto& grp = prog.groups[static_cast<size_t>(q)];
    const bool with0 = !grp[0].empty(), with1 = !grp[1].empty();
    if ((with0 && g0 <= 0.0) || (with1 && g1 <= 0.0)) return false;
    const double psi0 = with0 && with1 ? std::sqrt(g1 / (g0 * gq)) : 0.0;
    const double psi1 = with0 && with1 ? -std::sqrt(g0 / (g1 * gq)) : 0.0;
    for (int t : grp[0]) {
      coef[t] = v[t] * psi0 * kSqrtLn2Inv;
      qcol[static_cast<size_t>(t)] = q;
    }
    for (int t : grp[1]) {
      coef[t] = v[t] * psi1 * kSqrtLn2Inv;
      qcol[static_cast<size_t>(t)] = q;
    }
  }
  return true;
}

double barrier_value(const ConvexProgram& prog, const Eigen::VectorXd& v, double mu, double* f0 = nullptr) {
  const ObjectiveEval f = objective(prog, v);
  if (f0) *f0 = f.value;
  if (f.boundary) return -std::numeric_limits<double>::infinity();
  return f.value + mu * v.array().log().sum();
}

struct RoundedPoint {
  Policy policy;
  Eigen::VectorXd joint;
  double value = -std::numeric_limits<double>::infinity();
};

// Shared by certified_lower and the per-stage rounding inside maximize.
RoundedPoint round_to_feasible(const ConvexProgram& prog, const Eigen::VectorXd& v_hat, double policy_clamp) {
  PolicyExtraction pe = joint_to_policy(prog, v_hat);
  for (int q = 0; q <= prog.last_node; ++q) {
    if (prog.kind == GraphKind::LowerBound && q == prog.last_node) continue;
    for (double& a : pe.policy.attempt[static_cast<size_t>(q)])
      a = std::clamp(a, policy_clamp, 1.0 - policy_clamp);
  }
  RoundedPoint out;
  out.policy = pe.policy;
  out.joint = policy_to_joint(prog, out.policy);
  out.value = objective(prog, out.joint).value;
  return out;
}

}  // namespace

double certified_upper(const ConvexProgram& prog, const Eigen::VectorXd& v_hat, const Eigen::VectorXd& y) {
  if (v_hat.size() != prog.num_vars()) throw std::invalid_argument("certified_upper: primal dimension mismatch");
  if (y.size() != prog.num_rows()) throw std::invalid_argument("certified_upper: multiplier dimension mismatch");
  const ObjectiveEval f = objective(prog, v_hat);
  if (f.boundary)
    throw std::runtime_error("certified_upper: gradient unbounded at the boundary; tighten barrier stage");
  // The optimal multipliers grow like mu / v_t on coordinates the optimum
  // drives to zero, so the slack grad - A^T y cancels terms as large as ~1e11
  // down to ~1e-9. Accumulate every y-dependent sum in extended precision:
  // in double the rounding noise |y|*eps alone would loosen the bound by
  // orders of magnitude more than the duality gap being certified.
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const VecL yl = y.cast<long double>();
  VecL slack = f.grad.cast<long double>();
  for (int outer = 0; outer < prog.a.outerSize(); ++outer)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(prog.a, outer); it; ++it)
      slack[it.col()] -= static_cast<long double>(it.value()) * yl[it.row()];
  long double by = 0.0L;
  for (int i = 0; i < prog.b.size(); ++i) by += static_cast<long double>(prog.b[i]) * yl[i];
  long double pairing = 0.0L;
  for (int j = 0; j < v_hat.size(); ++j)
    pairing += static_cast<long double>(f.grad[j]) * static_cast<long double>(v_hat[j]);
  return static_cast<double>(static_cast<long double>(f.value) - pairing + by + slack.maxCoeff());
}

double certified_lower(const ConvexProgram& prog, const Eigen::VectorXd& v_hat, double policy_clamp) {
  if (v_hat.size() != prog.num_vars()) throw std::invalid_argument("certified_lower: primal dimension mismatch");
  return round_to_feasible(prog, v_hat, policy_clamp).value;
}

SolveResult maximize(const ConvexProgram& prog, const SolveOptions& opt) {
  // Default start: attempt probability ~ 1/nodes keeps the cumulative defer
  // product bounded below, so deep-count states start with mass ~ (1-eta)^u
  // instead of (1-eta)^u / 2^u. A half-half start at large node counts puts
  // the iterate so far from the first central point that Newton spends a
  // hundred doubling steps just lifting the vanishing coordinates.
  const double p = 1.0 / (prog.last_node + 2.0);
  return maximize(prog, uniform_policy(prog.kind, prog.last_node, p), opt);
}

SolveResult maximize(const ConvexProgram& prog, const Policy& init, const SolveOptions& opt) {
  if (prog.kind == GraphKind::UpperBound && prog.last_node == 0)
    throw std::invalid_argument("maximize: the single-node upper-bound construction is degenerate");
  if (!(prog.param.eta > 0.0 && prog.param.eta < 1.0))
    throw std::invalid_argument("maximize: eta must lie strictly inside (0,1)");

  const int n = prog.num_vars();
  const int nq = prog.last_node + 1;
  // Full-row-rank subset: refinement against the unregularized KKT operator
  // below only converges when the constraint rows are independent.
  const std::vector<int> keep = independent_row_set(prog);
  const int kr = static_cast<int>(keep.size());

  Eigen::SparseMatrix<double, Eigen::RowMajor> ar(kr, n);
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < kr; ++i)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(prog.a, keep[static_cast<size_t>(i)]); it;
           ++it)
        if (it.value() != 0.0) trips.emplace_back(i, static_cast<int>(it.col()), it.value());
    ar.setFromTriplets(trips.begin(), trips.end());
    ar.makeCompressed();
  }
  Eigen::VectorXd br(kr);
  for (int i = 0; i < kr; ++i) br[i] = prog.b[keep[static_cast<size_t>(i)]];

  SolveResult res;
  res.reduced_rows = kr;
  res.y = Eigen::VectorXd::Zero(prog.num_rows());

  // interior start: clamp the free entries of the supplied policy
  Policy start = init;
  check_policy(start);
  if (start.last_node != prog.last_node || start.kind != prog.kind)
    throw std::invalid_argument("maximize: initial policy shape does not match the program");
  for (int q = 0; q <= prog.last_node; ++q) {
    if (prog.kind == GraphKind::LowerBound && q == prog.last_node) continue;
    for (double& a : start.attempt[static_cast<size_t>(q)])
      a = std::clamp(a, opt.policy_clamp, 1.0 - opt.policy_clamp);
  }
  Eigen::VectorXd v = policy_to_joint(prog, start);
  if (v.minCoeff() <= 0.0) throw std::logic_error("maximize: interior start has boundary entries");

  const int m = n + nq + kr;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  bool analyzed = false;
  // Extended-precision rescue path: near the optimum whole subgraphs of the
  // chain die out and the unregularized KKT operator becomes so ill-conditioned
  // that double-precision refinement stalls; an 80-bit factorization buys the
  // missing digits exactly when that happens.
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<long double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldltL;
  Eigen::SparseMatrix<long double> kktL;
  bool analyzedL = false;

  Eigen::VectorXd coef(n);
  std::vector<int> qcol(static_cast<size_t>(n), 0);
  std::vector<Eigen::Triplet<double>> trips;
  Eigen::SparseMatrix<double> kkt(m, m);

  // Row equilibration for the constraint block: the scaled Jacobian A V has
  // rows supported on joint entries that span many orders of magnitude, and
  // without normalization the multipliers on small-mass rows blow up, so the
  // -delta perturbation injects visible infeasibility. Recomputed per iterate.
  Eigen::VectorXd rscale = Eigen::VectorXd::Ones(kr);
  auto update_rscale = [&](const Eigen::VectorXd& vv) {
    for (int i = 0; i < kr; ++i) {
      double s2 = 0.0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it) {
        const double e = it.value() * vv[it.col()];
        s2 += e * e;
      }
      rscale[i] = 1.0 / std::sqrt(std::max(s2, 1e-24));
    }
  };

  auto assemble = [&](double mu, double delta, const Eigen::VectorXd& vv) {
    trips.clear();
    for (int t = 0; t < n; ++t) trips.emplace_back(t, t, mu);
    for (int t = 0; t < n; ++t) trips.emplace_back(n + qcol[static_cast<size_t>(t)], t, coef[t]);
    for (int q = 0; q < nq; ++q) trips.emplace_back(n + q, n + q, -1.0);
    for (int i = 0; i < kr; ++i) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it)
        trips.emplace_back(n + nq + i, static_cast<int>(it.col()), it.value() * vv[it.col()] * rscale[i]);
      trips.emplace_back(n + nq + i, n + nq + i, -delta);
    }
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();
  };

  // residual of the unregularized KKT operator, for iterative refinement
  auto apply_kkt0 = [&](double mu, const Eigen::VectorXd& vv, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(m);
    const auto d = x.head(n);
    const auto w = x.segment(n, nq);
    const auto lam = x.tail(kr);
    Eigen::VectorXd rw = Eigen::VectorXd::Zero(nq);
    for (int t = 0; t < n; ++t) rw[qcol[static_cast<size_t>(t)]] += coef[t] * d[t];
    Eigen::VectorXd atl = ar.transpose() * (rscale.array() * lam.array()).matrix();
    for (int t = 0; t < n; ++t) y[t] = mu * d[t] + coef[t] * w[qcol[static_cast<size_t>(t)]] + vv[t] * atl[t];
    y.segment(n, nq) = rw - w;
    y.tail(kr) = (rscale.array() * (ar * (vv.array() * d.array()).matrix()).array()).matrix();
    return y;
  };

  auto apply_kkt0_long = [&](long double muL, const Eigen::VectorXd& vv, const VecL& x) {
    VecL y(m);
    VecL rw = VecL::Zero(nq);
    for (int t = 0; t < n; ++t) rw[qcol[static_cast<size_t>(t)]] += static_cast<long double>(coef[t]) * x[t];
    VecL atl = VecL::Zero(n);
    for (int i = 0; i < kr; ++i) {
      const long double li = static_cast<long double>(rscale[i]) * x[n + nq + i];
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it)
        atl[it.col()] += static_cast<long double>(it.value()) * li;
    }
    for (int t = 0; t < n; ++t)
      y[t] = muL * x[t] + static_cast<long double>(coef[t]) * x[n + qcol[static_cast<size_t>(t)]] +
             static_cast<long double>(vv[t]) * atl[t];
    for (int q = 0; q < nq; ++q) y[n + q] = rw[q] - x[n + q];
    for (int i = 0; i < kr; ++i) {
      long double acc = 0.0L;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ar, i); it; ++it)
        acc += static_cast<long double>(it.value()) * static_cast<long double>(vv[it.col()]) * x[it.col()];
      y[n + nq + i] = static_cast<long double>(rscale[i]) * acc;
    }
    return y;
  };

  auto scatter_multipliers = [&](const Eigen::VectorXd& lam) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(prog.num_rows());
    for (int i = 0; i < kr; ++i) full[keep[static_cast<size_t>(i)]] = lam[i];
    return full;
  };

  double mu = opt.mu0;
  // Below this the certificates cannot tighten any further (gap ~ 2 mu n), so
  // extra stages only burn factorizations.
  const double mu_floor = std::max(opt.mu_floor, opt.gap_tol / (100.0 * std::max(1, n)));
  Eigen::VectorXd stage_lambda;
  bool have_lambda = false;
  bool have_rounded = false;
  int stages_without_progress = 0;

  auto finish = [&](SolveStatus status) {
    res.status = status;
    {  // collapse runs of identical notes into one entry with a count
      std::vector<std::string> folded;
      for (size_t i = 0; i < res.notes.size();) {
        size_t j = i;
        while (j < res.notes.size() && res.notes[j] == res.notes[i]) ++j;
        folded.push_back(j - i == 1 ? res.notes[i] : res.notes[i] + " (x" + std::to_string(j - i) + ")");
        i = j;
      }
      res.notes = std::move(folded);
    }
    if (!have_rounded) {
      res.v = v;  // no rounding ever succeeded; report the raw interior iterate
      res.objective_value = objective(prog, res.v).value;
      res.notes.push_back("result: reporting the raw interior iterate (rounding never succeeded)");
    }
    res.residual_primal = (prog.a * res.v - prog.b).cwiseAbs().maxCoeff();
    return res;
  };

  for (int stage = 0; stage < opt.max_stages; ++stage) {
    int iters = 0;
    double delta = opt.delta;
    have_lambda = false;
    int tiny_progress = 0;
    // A stopped stage still reports certificates; the cross-stage progress
    // counter decides when the whole solve has hit its numerical floor.
    bool stage_stop = false;
    (void)stage_stop;
    for (; iters < opt.max_newton_per_stage; ++iters) {
      const ObjectiveEval f = objective(prog, v);
      if (f.boundary || !curvature_coefficients(prog, v, coef, qcol)) {
        res.notes.push_back("newton: iterate touched the objective boundary");
        stage_stop = true;
        break;
      }
      Eigen::VectorXd gradphi = f.grad + (mu * v.cwiseInverse().array()).matrix();
      update_rscale(v);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
      rhs.head(n) = v.array() * gradphi.array();
      // The constraint block stays homogeneous: with equilibrated rows the
      // multipliers are O(1), so the -delta perturbation leaks at most ~delta
      // of absolute infeasibility per step, which is negligible. Chasing the
      // residual here instead makes small-mass rows demand huge relative
      // corrections and destroys the ascent direction.

      bool factored = false;
      for (; delta <= 1e-3; delta *= 10.0) {
        assemble(mu, delta, v);
        if (!analyzed) {
          ldlt.analyzePattern(kkt);
          analyzed = true;
        }
        ldlt.factorize(kkt);
        if (ldlt.info() == Eigen::Success) {
          factored = true;
          break;
        }
        res.notes.push_back("newton: factorization failed, raising regularization");
      }

      // Refine against the unregularized operator, keeping the best iterate:
      // the factorization carries the -delta dual perturbation, so refinement
      // contracts while delta * ||K0^-1|| < 1 and is cut off once the true
      // residual stops improving.
      const double rhs_scale = std::max(1.0, rhs.norm());
      Eigen::VectorXd x;
      double res_best = std::numeric_limits<double>::infinity();
      if (factored) {
        x = ldlt.solve(rhs);
        Eigen::VectorXd x_best = x;
        res_best = (rhs - apply_kkt0(mu, v, x)).norm() / rhs_scale;
        for (int ref = 0; ref < 8 && res_best > 1e-11; ++ref) {
          const Eigen::VectorXd r = rhs - apply_kkt0(mu, v, x);
          x += ldlt.solve(r);
          const double res_now = (rhs - apply_kkt0(mu, v, x)).norm() / rhs_scale;
          if (res_now < res_best) {
            res_best = res_now;
            x_best = x;
          } else {
            break;
          }
        }
        x = x_best;
      }

      if (!factored || res_best > 1e-9) {
        if (!factored) assemble(mu, opt.delta, v);
        kktL = kkt.cast<long double>();
        if (!analyzedL) {
          ldltL.analyzePattern(kktL);
          analyzedL = true;
        }
        ldltL.factorize(kktL);
        if (ldltL.info() == Eigen::Success) {
          const VecL rhsL = rhs.cast<long double>();
          const long double rhs_scale_l = static_cast<long double>(rhs_scale);
          VecL xl = ldltL.solve(rhsL);
          VecL xl_best = xl;
          long double resl_best = (rhsL - apply_kkt0_long(mu, v, xl)).norm() / rhs_scale_l;
          for (int ref = 0; ref < 8 && resl_best > 1e-15L; ++ref) {
            const VecL r = rhsL - apply_kkt0_long(mu, v, xl);
            xl += ldltL.solve(r);
            const long double res_now = (rhsL - apply_kkt0_long(mu, v, xl)).norm() / rhs_scale_l;
            if (res_now < resl_best) {
              resl_best = res_now;
              xl_best = xl;
            } else {
              break;
            }
          }
          const Eigen::VectorXd xd = xl_best.cast<double>();
          const double res_ld = (rhs - apply_kkt0(mu, v, xd)).norm() / rhs_scale;
          if (res_ld < res_best) {
            res_best = res_ld;
            x = xd;
          }
        }
      }
      if (!std::isfinite(res_best)) {
        res.notes.push_back("newton: no usable factorization at this stage");
        stage_stop = true;
        break;
      }
      const auto d = x.head(n);
      // multipliers for the unscaled rows, used by the dual certificate
      stage_lambda = (rscale.array() * x.tail(kr).array()).matrix();
      have_lambda = true;

      Eigen::VectorXd w_exact = Eigen::VectorXd::Zero(nq);
      for (int t = 0; t < n; ++t) w_exact[qcol[static_cast<size_t>(t)]] += coef[t] * d[t];
      const double dec2 = mu * d.squaredNorm() + w_exact.squaredNorm();
      if (!std::isfinite(dec2)) {
        res.notes.push_back("newton: non-finite decrement");
        stage_stop = true;
        break;
      }
      if (std::getenv("BEHC_DEBUG_NEWTON"))
        std::fprintf(stderr, "dbg it=%d mu=%.3e dec2=%.3e |d|=%.3e |lam|=%.3e tail=%.3e res=%.3e vmin=%.3e\n",
                     iters, mu, dec2, d.norm(), stage_lambda.norm(), (br - ar * v).norm(), res_best, v.minCoeff());
      if (dec2 <= opt.newton_tol * mu) break;

      double alpha = 1.0;
      for (int t = 0; t < n; ++t)
        if (d[t] < 0.0) alpha = std::min(alpha, -0.99 / d[t]);
      const double slope = rhs.head(n).dot(d);
      if (!(slope > 0.0)) {
        res.notes.push_back("newton: search direction lost ascent");
        stage_stop = true;
        break;
      }
      const double phi0 = barrier_value(prog, v, mu);
      bool accepted = false;
      double phi_acc = phi0;
      for (int bt = 0; bt < 60; ++bt) {
        Eigen::VectorXd vn = v.array() * (1.0 + alpha * d.array());
        if (vn.minCoeff() > 0.0) {
          const double phin = barrier_value(prog, vn, mu);
          if (phin >= phi0 + opt.armijo * alpha * slope) {
            v.swap(vn);
            phi_acc = phin;
            accepted = true;
            break;
          }
        }
        alpha *= opt.backtrack;
      }
      if (!accepted) {
        res.notes.push_back("newton: line search stalled");
        stage_stop = true;
        break;
      }
      // machine-precision plateau: further centering cannot move the value
      if (phi_acc - phi0 <= 1e-13 * (1.0 + std::abs(phi_acc))) {
        if (++tiny_progress >= 2) break;
      } else {
        tiny_progress = 0;
      }
    }
    res.iterations += iters;

    // certificates at the end of the stage
    const double prev_gap = res.gap();
    if (!objective(prog, v).boundary) {
      const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(prog.num_rows());
      double upper = certified_upper(prog, v, y0);
      Eigen::VectorXd y_best = y0;
      if (have_lambda) {
        const Eigen::VectorXd y_full = scatter_multipliers(stage_lambda);
        const double with_dual = certified_upper(prog, v, y_full);
        if (with_dual < upper) {
          upper = with_dual;
          y_best = y_full;
        }
      }
      if (upper < res.certified_upper) {
        res.certified_upper = upper;
        res.y = y_best;
      }
      try {
        RoundedPoint rp = round_to_feasible(prog, v, opt.policy_clamp);
        if (rp.value > res.certified_lower) {
          res.certified_lower = rp.value;
          res.policy = rp.policy;
          res.v = rp.joint;
          res.objective_value = rp.value;
          have_rounded = true;
        }
      } catch (const std::exception& e) {
        res.notes.push_back(std::string("rounding: ") + e.what());
      }
    }
    if (opt.collect_trace) res.trace.push_back({mu, iters, res.certified_lower, res.certified_upper});

    if (res.gap() <= opt.gap_tol) return finish(SolveStatus::Converged);
    // A central pair at barrier weight mu certifies a gap of about mu * n, so
    // early stages with mu * n above the running gap cannot tighten anything;
    // only count a stage as stalled once improvement was actually expected.
    if (res.gap() < prev_gap - 1e-15)
      stages_without_progress = 0;
    else if (mu * n <= prev_gap)
      ++stages_without_progress;
    if (stages_without_progress >= 3) {
      res.notes.push_back("stages: certified gap stopped improving");
      return finish(SolveStatus::NumericalLimit);
    }
    mu *= opt.mu_shrink;
    if (mu < mu_floor) {
      res.notes.push_back("stages: barrier weight reached its floor");
      return finish(SolveStatus::NumericalLimit);
    }
  }
  return finish(SolveStatus::IterationLimit);
}

}  // namespace behc
