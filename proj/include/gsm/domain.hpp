#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>

#include "gsm/errors.hpp"

namespace gsm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Rectangular box domain in R^d.
struct Domain {
  VectorXd lower;
  VectorXd upper;

  Domain() = default;
  Domain(VectorXd lo, VectorXd up);

  int dim() const { return static_cast<int>(lower.size()); }
  double edge(int k) const { return upper[k] - lower[k]; }
  double volume() const;
  bool contains(const VectorXd& x) const;

  // Grows the box by `fraction` of each edge length on both sides.
  Domain inflated(double fraction) const;
};

// Common contract for database entries, Kriging models and generic surrogate
// models: an evaluable scalar function over a box. Implementations are
// immutable after construction; value() is safe to call concurrently.
class ResponseSurface {
 public:
  virtual ~ResponseSurface() = default;
  virtual double value(const VectorXd& x) const = 0;
};

using SurfacePtr = std::shared_ptr<const ResponseSurface>;

// Adapter for plain callables.
class FunctionSurface final : public ResponseSurface {
 public:
  explicit FunctionSurface(std::function<double(const VectorXd&)> fn)
      : fn_(std::move(fn)) {}
  double value(const VectorXd& x) const override { return fn_(x); }

 private:
  std::function<double(const VectorXd&)> fn_;
};

SurfacePtr make_surface(std::function<double(const VectorXd&)> fn);

// n sample points (rows) with observed values.
struct SampleSet {
  MatrixXd points;  // n x d
  VectorXd values;  // n

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  // Throws std::invalid_argument on empty sets, shape mismatch, non-finite
  // data or coincident points (relative tolerance 1e-12 on coordinates).
  void validate() const;
  // Additionally requires every point to lie inside `domain`.
  void validate(const Domain& domain) const;

  SampleSet appended(const VectorXd& x, double y) const;
};

}  // namespace gsm
