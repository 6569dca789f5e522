#include "gsm/testbed.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "gsm/errors.hpp"
#include "gsm/rng.hpp"

namespace gsm {
namespace {

// Ridge direction in normalized coordinates.
const double kRidgeU0 = 0.8;
const double kRidgeU1 = 0.6;

class FamilyMember final : public ResponseSurface {
 public:
  explicit FamilyMember(FamilyParams params) : params_(std::move(params)) {
    if (params_.slope.size() != 2 || params_.bump_center.size() != 2)
      throw std::invalid_argument("FamilyParams: two-dimensional only");
    if (!(params_.ridge_width > 0.0) || !(params_.bump_radius > 0.0))
      throw std::invalid_argument("FamilyParams: widths must be positive");
    const Domain box = testbed_domain();
    lower_ = box.lower;
    inv_edge_ = VectorXd(2);
    for (int k = 0; k < 2; ++k) inv_edge_[k] = 1.0 / box.edge(k);
  }

  double value(const VectorXd& x) const override {
    const double t0 = (x[0] - lower_[0]) * inv_edge_[0];
    const double t1 = (x[1] - lower_[1]) * inv_edge_[1];
    const double ridge_coord = kRidgeU0 * t0 + kRidgeU1 * t1;
    const double d0 = t0 - params_.bump_center[0];
    const double d1 = t1 - params_.bump_center[1];
    const double r2 = params_.bump_radius * params_.bump_radius;
    return params_.slope.dot(x) + params_.intercept +
           params_.ridge_amplitude *
               std::tanh((ridge_coord - params_.ridge_location) /
                         params_.ridge_width) +
           params_.bump_height * std::exp(-(d0 * d0 + d1 * d1) / (2.0 * r2));
  }

 private:
  FamilyParams params_;
  VectorXd lower_;
  VectorXd inv_edge_;
};

class DistortedMember final : public ResponseSurface {
 public:
  DistortedMember(SurfacePtr inner, TransformQ g)
      : inner_(std::move(inner)), g_(std::move(g)) {}

  double value(const VectorXd& x) const override {
    return transform_value(inner_->value(transform_point(x, g_)), g_);
  }

 private:
  SurfacePtr inner_;
  TransformQ g_;
};

}  // namespace

FamilyParams FamilyParams::defaults() {
  FamilyParams p;
  p.slope = VectorXd(2);
  p.slope << 0.5, 0.04;
  p.intercept = 0.3;
  p.ridge_amplitude = -0.35;
  p.ridge_location = 0.85;
  p.ridge_width = 0.12;
  p.bump_center = VectorXd(2);
  p.bump_center << 0.7, 0.75;
  p.bump_radius = 0.18;
  p.bump_height = 0.25;
  return p;
}

Domain testbed_domain() {
  VectorXd lo(2), up(2);
  lo << 0.2, -4.0;
  up << 0.9, 12.0;
  return Domain{lo, up};
}

SurfacePtr make_family_member(const FamilyParams& params) {
  return std::make_shared<FamilyMember>(params);
}

SurfacePtr make_distorted_member(const FamilyParams& params,
                                 const TransformQ& g) {
  return std::make_shared<DistortedMember>(make_family_member(params), g);
}

SyntheticDatabase build_synthetic_database(int m, std::uint64_t seed,
                                           bool distort) {
  if (m < 2)
    throw std::invalid_argument("build_synthetic_database: need m >= 2");
  Rng rng(seed);
  SyntheticDatabase db;
  db.domain = testbed_domain();
  const FamilyParams base = FamilyParams::defaults();

  for (int j = 0; j < m; ++j) {
    FamilyParams pj = base;
    TransformQ g = TransformQ::identity(2);
    if (j > 0) {
      pj.intercept += 0.06 * rng.uniform(-1.0, 1.0);
      pj.ridge_amplitude *= 1.0 + 0.2 * rng.uniform(-1.0, 1.0);
      if (distort) {
        for (int k = 0; k < 2; ++k) {
          g.axis_scale[k] = 0.05 * rng.uniform(-1.0, 1.0);
          g.axis_shift[k] =
              0.05 * rng.uniform(-1.0, 1.0) * db.domain.edge(k);
        }
        g.value_scale = 0.05 * rng.uniform(-1.0, 1.0);
        g.value_shift = 0.05 * rng.uniform(-1.0, 1.0);
      }
    }
    db.params.push_back(pj);
    db.distortions.push_back(g);
    db.entries.push_back(make_distorted_member(pj, g));
    db.true_q.push_back(g.inverse());
  }
  return db;
}

ValidationGrid ValidationGrid::build(const ResponseSurface& oracle,
                                     const Domain& domain, int per_axis) {
  if (per_axis < 2)
    throw std::invalid_argument("ValidationGrid: per_axis must be >= 2");
  const int d = domain.dim();
  int total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;

  ValidationGrid grid;
  grid.points.resize(total, d);
  grid.values.resize(total);
  for (int i = 0; i < total; ++i) {
    int rem = i;
    for (int k = 0; k < d; ++k) {
      const int idx = rem % per_axis;
      rem /= per_axis;
      grid.points(i, k) = domain.lower[k] +
                          domain.edge(k) * idx / (per_axis - 1.0);
    }
    grid.values[i] = oracle.value(grid.points.row(i).transpose());
  }
  const double mean = grid.values.mean();
  grid.sigma = std::sqrt((grid.values.array() - mean).square().mean());
  if (!(grid.sigma > 0.0))
    throw DegenerateValidation(
        "ValidationGrid: oracle is constant on the grid");
  return grid;
}

std::pair<double, double> error_metrics(const ResponseSurface& model,
                                        const ValidationGrid& grid) {
  const int total = static_cast<int>(grid.points.rows());
  if (total == 0)
    throw std::invalid_argument("error_metrics: empty grid");
  double sum = 0.0;
  double peak = 0.0;
  for (int i = 0; i < total; ++i) {
    const double err =
        std::abs(model.value(grid.points.row(i).transpose()) - grid.values[i]);
    sum += err;
    peak = std::max(peak, err);
  }
  return {sum / (grid.sigma * total), peak / grid.sigma};
}

}  // namespace gsm
