#pragma once

#include "gsm/gauss_newton.hpp"
#include "gsm/pod.hpp"

namespace gsm {

struct GappyConfig {
  // Ridge weight; negative means 1e-2 * n * population variance of the
  // sample values.
  double delta = -1.0;
  // The transformed fit needs rank + min_extra samples; below that it falls
  // back to the linear fit with identity prediction transform.
  int min_extra = 5;
  LmOptions gn;
};

// Surrogate assembled from mode coefficients plus a prediction-space
// transform: value(x) = sum_j a_y[j] * aligned entry j at the p-mapped
// preimage of x, shifted by the p value offset.
struct GenericSurrogateModel final : public ResponseSurface {
  PodBasis basis;
  VectorXd a_psi;  // coefficients on the orthonormal modes
  VectorXd a_y;    // pullback * a_psi, weights on the aligned entries
  TransformP p;
  double residual = 0.0;  // sum of squared value mismatches at the samples
  double delta = 0.0;
  bool linear_fallback = false;

  double value(const VectorXd& x) const override;
};

// Least-squares mode coefficients with the identity transform:
// argmin_a sum_i (phi_i - a . psi(x_i))^2 via column-pivoted QR.
// Throws RankDeficient when the psi rows cannot determine a.
VectorXd gappy_fit_linear(const PodBasis& basis, const SampleSet& samples);

// Normal equations (J^T J, J^T e, objective) of the transformed problem at
// (a_psi, p) with ridge weight delta. Residuals are the sample mismatches
// plus sqrt(delta) * p; the objective is their squared sum.
NormalEquations gappy_normal_equations(const PodBasis& basis,
                                       const SampleSet& samples,
                                       const VectorXd& a_psi,
                                       const TransformP& p, double delta);

// Joint fit of mode coefficients and the prediction transform, started from
// the linear solution with the identity transform. Transforms under which
// some corner of the domain box would leave the extended validity region
// are infeasible, so the fitted model is evaluable on the whole domain.
GenericSurrogateModel gappy_fit_transformed(const PodBasis& basis,
                                            const SampleSet& samples,
                                            const GappyConfig& cfg = {});

}  // namespace gsm
