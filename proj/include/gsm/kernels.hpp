#pragma once

#include <vector>

#include "gsm/domain.hpp"
#include "gsm/transform.hpp"

namespace gsm {

// Hot evaluation kernels, parallelized with OpenMP. Reductions use
// fixed-chunk ordered merges so results do not depend on the thread count.
// gsm::reference holds naive serial equivalents used as test oracles.
namespace kernels {

// Applies the input map of q to every row of points.
MatrixXd map_points(const MatrixXd& points, const TransformQ& q);

// Table of aligned evaluations: T(i,j) = (1+q5_j) * y_j(map(node_i, q_j)) + q6_j.
MatrixXd eval_table(const std::vector<SurfacePtr>& entries,
                    const std::vector<TransformQ>& transforms,
                    const MatrixXd& nodes);

// Identity-transform overload: T(i,j) = y_j(node_i).
MatrixXd eval_table(const std::vector<SurfacePtr>& entries,
                    const MatrixXd& nodes);

// C = table^T diag(weights) table, accumulated chunk-ordered.
MatrixXd weighted_gram(const MatrixXd& table, const VectorXd& weights);

}  // namespace kernels

namespace reference {

MatrixXd map_points(const MatrixXd& points, const TransformQ& q);
MatrixXd eval_table(const std::vector<SurfacePtr>& entries,
                    const std::vector<TransformQ>& transforms,
                    const MatrixXd& nodes);
MatrixXd weighted_gram(const MatrixXd& table, const VectorXd& weights);

}  // namespace reference

}  // namespace gsm
