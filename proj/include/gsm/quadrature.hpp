#pragma once

#include "gsm/domain.hpp"

namespace gsm {

// Numerical quadrature over a box: sum_i w_i f(node_i) approximates the
// integral of f over the box. Weights are positive and sum to the volume.
struct QuadratureRule {
  MatrixXd nodes;    // N x d
  VectorXd weights;  // N

  int size() const { return static_cast<int>(nodes.rows()); }
  int dim() const { return static_cast<int>(nodes.cols()); }

  // Tensor-product trapezoid rule with `per_axis` nodes along each axis.
  static QuadratureRule tensor_trapezoid(const Domain& domain, int per_axis);
};

}  // namespace gsm
