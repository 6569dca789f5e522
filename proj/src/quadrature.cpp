#include "gsm/quadrature.hpp"

#include <stdexcept>
#include <vector>

namespace gsm {

QuadratureRule QuadratureRule::tensor_trapezoid(const Domain& domain,
                                                int per_axis) {
  if (per_axis < 2)
    throw std::invalid_argument("tensor_trapezoid: need >= 2 nodes per axis");
  const int d = domain.dim();

  std::vector<VectorXd> axis_nodes(d), axis_weights(d);
  for (int k = 0; k < d; ++k) {
    const double h = domain.edge(k) / (per_axis - 1);
    axis_nodes[k].resize(per_axis);
    axis_weights[k].resize(per_axis);
    for (int i = 0; i < per_axis; ++i) {
      axis_nodes[k][i] = domain.lower[k] + i * h;
      axis_weights[k][i] = (i == 0 || i == per_axis - 1) ? 0.5 * h : h;
    }
  }

  int total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;

  QuadratureRule rule;
  rule.nodes.resize(total, d);
  rule.weights.resize(total);
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const int i = rem % per_axis;
      rem /= per_axis;
      rule.nodes(idx, k) = axis_nodes[k][i];
      w *= axis_weights[k][i];
    }
    rule.weights[idx] = w;
  }
  return rule;
}

}  // namespace gsm
