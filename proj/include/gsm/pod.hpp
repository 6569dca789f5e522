#pragma once

#include "gsm/alignment.hpp"
#include "gsm/quadrature.hpp"

namespace gsm {

struct PodConfig {
  double threshold = 0.999;  // retained fraction of total spectral energy
  bool mean_center = false;  // subtract the ensemble mean across entries
};

// C(j,k) = sum_i w_i ybar_j(node_i) ybar_k(node_i), the quadrature Gram
// matrix of the aligned entries. With mean_center the ensemble row mean is
// removed from the evaluation table first.
MatrixXd covariance_matrix(const AlignedDatabase& db, const QuadratureRule& quad,
                           bool mean_center = false);

struct PodBasis {
  AlignedDatabase db;
  VectorXd eigenvalues;  // all m, descending
  MatrixXd modes;        // m x rank, sign-fixed eigenvectors
  VectorXd sigma;        // rank, sqrt of the leading eigenvalues
  int rank = 0;
  double threshold = 0.0;
  bool mean_centered = false;

  int dim() const { return db.dim(); }

  // modes * diag(1/sigma): maps psi-coefficients to aligned-entry weights.
  MatrixXd pullback() const;

  // psi(x) = pullback^T * [aligned entry values at x].
  VectorXd eval(const VectorXd& x) const;
};

// Eigendecomposition of the covariance matrix with rank selection: the
// smallest l whose leading eigenvalue sum reaches threshold * total, counting
// only eigenvalues above 1e-12 of the largest. Throws DegenerateSpectrum when
// no admissible rank exists.
PodBasis compute_pod(const AlignedDatabase& db, const MatrixXd& covariance,
                     const PodConfig& cfg = {});

}  // namespace gsm
