#pragma once

#include <functional>

#include "gsm/domain.hpp"

namespace gsm {

// Normal equations of a residual least squares problem at a point z:
// jtj = J^T J, jtr = J^T r, objective = |r|^2.
struct NormalEquations {
  MatrixXd jtj;
  VectorXd jtr;
  double objective = 0.0;
};

struct LmOptions {
  double lambda0 = 1e-3;
  double lambda_max = 1e12;
  int max_iters = 100;
  double rel_tol = 1e-8;
};

struct LmOutcome {
  VectorXd z;
  double objective = 0.0;
  int iterations = 0;
  int accepted_steps = 0;
};

// Damped Gauss-Newton (Levenberg) minimization of an objective whose normal
// equations are supplied by the caller. The damping is scaled by the
// diagonal of J^T J. objective(z) may return +inf for infeasible candidates,
// which rejects the step. The objective decreases monotonically across
// accepted steps. Throws NoDescent when the damping is exhausted with no
// accepted step while the gradient is not negligible; a start that is
// already stationary returns unchanged instead.
LmOutcome levenberg_marquardt(
    const std::function<NormalEquations(const VectorXd&)>& assemble,
    const std::function<double(const VectorXd&)>& objective, VectorXd z0,
    const LmOptions& opts = {});

}  // namespace gsm
