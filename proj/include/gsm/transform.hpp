#pragma once

#include "gsm/domain.hpp"

namespace gsm {

// Admissible database transformation: an affine map per input axis plus an
// affine map of the output value. All parameters are offsets from the
// identity, so the zero vector is the identity transformation. The packed
// layout is [scale_0, shift_0, ..., scale_{d-1}, shift_{d-1}, value_scale,
// value_shift], i.e. 2d + 2 parameters (6 for d = 2).
struct TransformQ {
  VectorXd axis_scale;  // d entries, map uses (1 + axis_scale[k])
  VectorXd axis_shift;  // d entries
  double value_scale = 0.0;
  double value_shift = 0.0;

  static TransformQ identity(int dim);
  static TransformQ unpack(const VectorXd& packed, int dim);
  VectorXd pack() const;

  int dim() const { return static_cast<int>(axis_scale.size()); }
  int packed_size() const { return 2 * dim() + 2; }
  bool is_identity(double tol = 0.0) const;

  // Requires 1 + axis_scale[k] != 0 and 1 + value_scale != 0.
  TransformQ inverse() const;
};

// Prediction-time transformation for the generic surrogate model: affine map
// per input axis plus an output shift. There is no output scale because it
// would be redundant with the fitted coefficients. Packed layout
// [scale_0, shift_0, ..., value_shift], i.e. 2d + 1 parameters (5 for d = 2).
struct TransformP {
  VectorXd axis_scale;
  VectorXd axis_shift;
  double value_shift = 0.0;

  static TransformP identity(int dim);
  static TransformP unpack(const VectorXd& packed, int dim);
  VectorXd pack() const;

  int dim() const { return static_cast<int>(axis_scale.size()); }
  int packed_size() const { return 2 * dim() + 1; }
};

// x_bar[k] = x[k] * (1 + scale[k]) + shift[k]
VectorXd transform_point(const VectorXd& x, const TransformQ& q);
VectorXd transform_point(const VectorXd& x, const TransformP& p);

// y_bar = y * (1 + value_scale) + value_shift
double transform_value(double y, const TransformQ& q);

}  // namespace gsm
