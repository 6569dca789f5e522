#include "gsm/pod.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gsm/errors.hpp"
#include "gsm/kernels.hpp"

namespace gsm {
namespace {

constexpr double kEigenvalueCutoff = 1e-12;

MatrixXd aligned_table(const AlignedDatabase& db, const QuadratureRule& quad,
                       bool mean_center) {
  db.validate();
  if (quad.dim() != db.dim())
    throw std::invalid_argument("covariance_matrix: quadrature dimension");
  db.check_preimages(quad.nodes);
  MatrixXd table = kernels::eval_table(db.entries, db.transforms, quad.nodes);
  if (mean_center) table.colwise() -= table.rowwise().mean();
  return table;
}

}  // namespace

MatrixXd covariance_matrix(const AlignedDatabase& db,
                           const QuadratureRule& quad, bool mean_center) {
  return kernels::weighted_gram(aligned_table(db, quad, mean_center),
                                quad.weights);
}

MatrixXd PodBasis::pullback() const {
  return modes * sigma.cwiseInverse().asDiagonal();
}

VectorXd PodBasis::eval(const VectorXd& x) const {
  db.check_preimages(x.transpose());
  VectorXd values(db.size());
  for (int j = 0; j < db.size(); ++j) values[j] = db.aligned_value(j, x);
  if (mean_centered) values.array() -= values.mean();
  return pullback().transpose() * values;
}

PodBasis compute_pod(const AlignedDatabase& db, const MatrixXd& covariance,
                     const PodConfig& cfg) {
  db.validate();
  const int m = db.size();
  if (covariance.rows() != m || covariance.cols() != m)
    throw std::invalid_argument("compute_pod: covariance size mismatch");
  if (!(cfg.threshold > 0.0) || cfg.threshold > 1.0)
    throw std::invalid_argument("compute_pod: threshold must be in (0, 1]");

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(covariance);
  if (eig.info() != Eigen::Success)
    throw SingularSystem("compute_pod: eigendecomposition failed");

  PodBasis basis;
  basis.db = db;
  basis.threshold = cfg.threshold;
  basis.mean_centered = cfg.mean_center;
  basis.eigenvalues = eig.eigenvalues().reverse();
  MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  const double lambda1 = basis.eigenvalues[0];
  if (!(lambda1 > 0.0))
    throw DegenerateSpectrum("compute_pod: no positive eigenvalues");

  int numerical_rank = 0;
  while (numerical_rank < m &&
         basis.eigenvalues[numerical_rank] >= kEigenvalueCutoff * lambda1)
    ++numerical_rank;

  const double total = basis.eigenvalues.sum();
  double partial = 0.0;
  int rank = 0;
  for (int l = 1; l <= numerical_rank; ++l) {
    partial += basis.eigenvalues[l - 1];
    if (partial >= cfg.threshold * total) {
      rank = l;
      break;
    }
  }
  if (rank == 0)
    throw DegenerateSpectrum(
        "compute_pod: threshold " + std::to_string(cfg.threshold) +
        " not reachable within numerical rank " +
        std::to_string(numerical_rank));

  // Deterministic sign: the largest-magnitude component of each mode is
  // positive; ties resolve to the first index.
  for (int l = 0; l < rank; ++l) {
    int at = 0;
    vectors.col(l).cwiseAbs().maxCoeff(&at);
    if (vectors(at, l) < 0.0) vectors.col(l) = -vectors.col(l);
  }

  basis.rank = rank;
  basis.modes = vectors.leftCols(rank);
  basis.sigma = basis.eigenvalues.head(rank).cwiseSqrt();
  return basis;
}

}  // namespace gsm
