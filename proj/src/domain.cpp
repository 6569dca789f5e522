#include "gsm/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace gsm {

Domain::Domain(VectorXd lo, VectorXd up)
    : lower(std::move(lo)), upper(std::move(up)) {
  if (lower.size() < 1 || lower.size() != upper.size())
    throw std::invalid_argument("Domain: need matching bounds with d >= 1");
  for (int k = 0; k < dim(); ++k)
    if (!(lower[k] < upper[k]))
      throw std::invalid_argument("Domain: lower[k] < upper[k] required");
}

double Domain::volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= edge(k);
  return v;
}

bool Domain::contains(const VectorXd& x) const {
  if (x.size() != lower.size()) return false;
  for (int k = 0; k < dim(); ++k)
    if (x[k] < lower[k] || x[k] > upper[k]) return false;
  return true;
}

Domain Domain::inflated(double fraction) const {
  VectorXd lo = lower, up = upper;
  for (int k = 0; k < dim(); ++k) {
    const double pad = fraction * edge(k);
    lo[k] -= pad;
    up[k] += pad;
  }
  return Domain(lo, up);
}

SurfacePtr make_surface(std::function<double(const VectorXd&)> fn) {
  return std::make_shared<FunctionSurface>(std::move(fn));
}

void SampleSet::validate() const {
  const int n = size(), d = dim();
  if (n < 1 || d < 1) throw std::invalid_argument("SampleSet: n >= 1, d >= 1");
  if (values.size() != n)
    throw std::invalid_argument("SampleSet: points/values size mismatch");
  if (!points.allFinite() || !values.allFinite())
    throw std::invalid_argument("SampleSet: non-finite data");
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double scale = std::max(
          1.0, std::max(points.row(i).cwiseAbs().maxCoeff(),
                        points.row(j).cwiseAbs().maxCoeff()));
      if ((points.row(i) - points.row(j)).cwiseAbs().maxCoeff() <=
          1e-12 * scale)
        throw std::invalid_argument("SampleSet: coincident sample points");
    }
  }
}

void SampleSet::validate(const Domain& domain) const {
  validate();
  if (dim() != domain.dim())
    throw std::invalid_argument("SampleSet: dimension mismatch with domain");
  for (int i = 0; i < size(); ++i)
    if (!domain.contains(points.row(i).transpose()))
      throw std::invalid_argument("SampleSet: point outside domain");
}

SampleSet SampleSet::appended(const VectorXd& x, double y) const {
  SampleSet out;
  out.points.resize(size() + 1, dim());
  out.points.topRows(size()) = points;
  out.points.row(size()) = x.transpose();
  out.values.resize(size() + 1);
  out.values.head(size()) = values;
  out.values[size()] = y;
  return out;
}

}  // namespace gsm
