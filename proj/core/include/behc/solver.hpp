#pragma once

#include "behc/program.hpp"

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace behc {

enum class SolveStatus { Converged, IterationLimit, NumericalLimit };

struct SolveOptions {
  double gap_tol = 1e-9;        // stop once certified_upper - certified_lower is this small
  double mu0 = 1.0;             // initial barrier weight
  double mu_shrink = 0.2;       // per-stage barrier reduction
  double mu_floor = 1e-16;      // give up shrinking below this
  int max_stages = 64;
  int max_newton_per_stage = 100;
  // Centering target: stop the stage once the squared Newton decrement falls
  // below newton_tol * mu (the decrement of the mu-normalized barrier scales
  // with sqrt(mu), so an absolute threshold would freeze the iterate).
  double newton_tol = 0.09;
  double delta = 1e-10;            // KKT dual regularization
  double policy_clamp = 1e-12;     // interior clamp used when rounding to a policy
  double armijo = 1e-4;            // line-search acceptance slope fraction
  double backtrack = 0.5;          // line-search step shrink factor
  bool collect_trace = true;
};

struct StageTrace {
  double mu = 0.0;
  int newton_iters = 0;
  double certified_lower = -std::numeric_limits<double>::infinity();
  double certified_upper = std::numeric_limits<double>::infinity();
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalLimit;
  // Exactly feasible primal point induced by the best rounded policy (falls
  // back to the last interior iterate when no rounding ever succeeded).
  Eigen::VectorXd v;
  double objective_value = 0.0;  // objective at v
  // objective of the exactly feasible point induced by the rounded policy
  double certified_lower = -std::numeric_limits<double>::infinity();
  // gradient/dual bound valid for the full program
  double certified_upper = std::numeric_limits<double>::infinity();
  double gap() const { return certified_upper - certified_lower; }
  Policy policy;         // rounded policy attaining certified_lower
  Eigen::VectorXd y;     // multipliers over the full row set behind certified_upper
  double residual_primal = std::numeric_limits<double>::infinity();  // max-norm of A v - b
  int iterations = 0;    // total Newton iterations across stages
  int reduced_rows = 0;
  std::vector<StageTrace> trace;
  std::vector<std::string> notes;
};

// Dual/gradient bound on the optimum, valid for every multiplier vector y over
// the full row set. Throws when v_hat touches the objective boundary
// ("gradient unbounded"); tighten the barrier stage instead of calling here.
double certified_upper(const ConvexProgram& prog, const Eigen::VectorXd& v_hat, const Eigen::VectorXd& y);

// Achievable value: round v_hat to a policy, clamp its free entries to the
// interior, rebuild the exactly feasible joint and evaluate the objective.
double certified_lower(const ConvexProgram& prog, const Eigen::VectorXd& v_hat, double policy_clamp = 1e-12);

SolveResult maximize(const ConvexProgram& prog, const SolveOptions& opt = {});
SolveResult maximize(const ConvexProgram& prog, const Policy& init, const SolveOptions& opt = {});

}  // namespace behc
