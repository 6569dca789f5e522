#include "gsm/gauss_newton.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gsm {

LmOutcome levenberg_marquardt(
    const std::function<NormalEquations(const VectorXd&)>& assemble,
    const std::function<double(const VectorXd&)>& objective, VectorXd z0,
    const LmOptions& opts) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  LmOutcome out;
  out.z = std::move(z0);
  out.objective = objective(out.z);
  if (!std::isfinite(out.objective))
    throw std::invalid_argument("levenberg_marquardt: infeasible start");

  double lambda = opts.lambda0;
  for (int it = 0; it < opts.max_iters; ++it) {
    out.iterations = it + 1;
    const NormalEquations ne = assemble(out.z);
    const double grad_norm = ne.jtr.cwiseAbs().maxCoeff();
    if (grad_norm <= 1e-14 * (1.0 + std::abs(out.objective))) break;

    const double diag_max = ne.jtj.diagonal().maxCoeff();
    const double floor = 1e-12 * std::max(diag_max, 0.0) + 1e-300;
    const VectorXd damping = ne.jtj.diagonal().cwiseMax(floor);

    double rel_decrease = 0.0;
    bool stepped = false;
    while (lambda <= opts.lambda_max) {
      MatrixXd m = ne.jtj;
      m.diagonal() += lambda * damping;
      Eigen::LDLT<MatrixXd> solver(m);
      if (solver.info() == Eigen::Success) {
        const VectorXd cand = out.z - solver.solve(ne.jtr);
        double fc = kInf;
        if (cand.allFinite()) fc = objective(cand);
        if (fc < out.objective) {
          rel_decrease = (out.objective - fc) /
                         std::max(out.objective, 1e-300);
          out.z = cand;
          out.objective = fc;
          out.accepted_steps += 1;
          lambda = std::max(lambda / 10.0, 1e-15);
          stepped = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      if (out.accepted_steps == 0 &&
          grad_norm > 1e-8 * (1.0 + std::abs(out.objective)))
        throw NoDescent(
            "damping exhausted without an objective decrease from the start");
      break;
    }
    if (rel_decrease < opts.rel_tol) break;
  }
  return out;
}

}  // namespace gsm
