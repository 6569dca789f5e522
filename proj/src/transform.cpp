#include "gsm/transform.hpp"

#include <cmath>
#include <stdexcept>

namespace gsm {

TransformQ TransformQ::identity(int dim) {
  TransformQ q;
  q.axis_scale = VectorXd::Zero(dim);
  q.axis_shift = VectorXd::Zero(dim);
  return q;
}

TransformQ TransformQ::unpack(const VectorXd& packed, int dim) {
  if (packed.size() != 2 * dim + 2)
    throw std::invalid_argument("TransformQ::unpack: wrong parameter count");
  TransformQ q = identity(dim);
  for (int k = 0; k < dim; ++k) {
    q.axis_scale[k] = packed[2 * k];
    q.axis_shift[k] = packed[2 * k + 1];
  }
  q.value_scale = packed[2 * dim];
  q.value_shift = packed[2 * dim + 1];
  return q;
}

VectorXd TransformQ::pack() const {
  VectorXd out(packed_size());
  for (int k = 0; k < dim(); ++k) {
    out[2 * k] = axis_scale[k];
    out[2 * k + 1] = axis_shift[k];
  }
  out[2 * dim()] = value_scale;
  out[2 * dim() + 1] = value_shift;
  return out;
}

bool TransformQ::is_identity(double tol) const {
  return pack().cwiseAbs().maxCoeff() <= tol;
}

TransformQ TransformQ::inverse() const {
  TransformQ inv = identity(dim());
  for (int k = 0; k < dim(); ++k) {
    const double s = 1.0 + axis_scale[k];
    if (s == 0.0)
      throw std::invalid_argument("TransformQ::inverse: degenerate axis scale");
    inv.axis_scale[k] = 1.0 / s - 1.0;
    inv.axis_shift[k] = -axis_shift[k] / s;
  }
  const double vs = 1.0 + value_scale;
  if (vs == 0.0)
    throw std::invalid_argument("TransformQ::inverse: degenerate value scale");
  inv.value_scale = 1.0 / vs - 1.0;
  inv.value_shift = -value_shift / vs;
  return inv;
}

TransformP TransformP::identity(int dim) {
  TransformP p;
  p.axis_scale = VectorXd::Zero(dim);
  p.axis_shift = VectorXd::Zero(dim);
  return p;
}

TransformP TransformP::unpack(const VectorXd& packed, int dim) {
  if (packed.size() != 2 * dim + 1)
    throw std::invalid_argument("TransformP::unpack: wrong parameter count");
  TransformP p = identity(dim);
  for (int k = 0; k < dim; ++k) {
    p.axis_scale[k] = packed[2 * k];
    p.axis_shift[k] = packed[2 * k + 1];
  }
  p.value_shift = packed[2 * dim];
  return p;
}

VectorXd TransformP::pack() const {
  VectorXd out(packed_size());
  for (int k = 0; k < dim(); ++k) {
    out[2 * k] = axis_scale[k];
    out[2 * k + 1] = axis_shift[k];
  }
  out[2 * dim()] = value_shift;
  return out;
}

VectorXd transform_point(const VectorXd& x, const TransformQ& q) {
  VectorXd out(x.size());
  for (int k = 0; k < x.size(); ++k)
    out[k] = x[k] * (1.0 + q.axis_scale[k]) + q.axis_shift[k];
  return out;
}

VectorXd transform_point(const VectorXd& x, const TransformP& p) {
  VectorXd out(x.size());
  for (int k = 0; k < x.size(); ++k)
    out[k] = x[k] * (1.0 + p.axis_scale[k]) + p.axis_shift[k];
  return out;
}

double transform_value(double y, const TransformQ& q) {
  return y * (1.0 + q.value_scale) + q.value_shift;
}

}  // namespace gsm
