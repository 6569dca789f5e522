#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gsm/domain.hpp"
#include "gsm/transform.hpp"

namespace gsm {

// Analytic two-dimensional response family shaped like a lift curve over a
// Mach/alpha box: linear background in raw coordinates, a tanh ridge along a
// fixed direction of the normalized coordinates, and a Gaussian bump.
// Members are cheap, smooth, and defined on all of R^2, so they tolerate
// evaluation beyond the reference domain.
struct FamilyParams {
  VectorXd slope;  // 2, raw-coordinate linear part
  double intercept = 0.0;
  double ridge_amplitude = 0.0;
  double ridge_location = 0.0;  // along the ridge coordinate, normalized
  double ridge_width = 1.0;
  VectorXd bump_center;  // 2, normalized coordinates
  double bump_radius = 1.0;
  double bump_height = 0.0;

  static FamilyParams defaults();
};

// Reference box the family is normalized against.
Domain testbed_domain();

SurfacePtr make_family_member(const FamilyParams& params);

// Family member observed through an admissible distortion g: value map of g
// applied to the member evaluated at the g-mapped input.
SurfacePtr make_distorted_member(const FamilyParams& params,
                                 const TransformQ& g);

struct SyntheticDatabase {
  Domain domain;
  std::vector<FamilyParams> params;
  std::vector<TransformQ> distortions;  // [0] is the identity
  std::vector<SurfacePtr> entries;      // distorted members
  std::vector<TransformQ> true_q;       // exact aligning transforms
};

// m members sharing the default shape with per-member value-type
// perturbations (intercept, ridge amplitude), so the undistorted family
// spans few modes. With distort, every entry but the first is wrapped in a
// random admissible distortion small enough that its inverse stays inside
// the standard domain extension.
SyntheticDatabase build_synthetic_database(int m, std::uint64_t seed,
                                           bool distort);

struct ValidationGrid {
  MatrixXd points;
  VectorXd values;
  double sigma = 0.0;  // population standard deviation of the values

  // Tensor grid with per_axis points per axis, endpoints included. Throws
  // DegenerateValidation when the oracle is constant on the grid.
  static ValidationGrid build(const ResponseSurface& oracle,
                              const Domain& domain, int per_axis);
};

// Normalized mean and max absolute error of the model over the grid.
std::pair<double, double> error_metrics(const ResponseSurface& model,
                                        const ValidationGrid& grid);

}  // namespace gsm
