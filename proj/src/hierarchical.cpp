#include "gsm/hierarchical.hpp"

#include <Eigen/LU>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "gsm/errors.hpp"

namespace gsm {
namespace {

MatrixXd trend_column(const SampleSet& samples, const SurfacePtr& trend) {
  if (!trend) throw std::invalid_argument("hierarchical: null trend");
  const int n = static_cast<int>(samples.points.rows());
  MatrixXd phi(n, 1);
  for (int i = 0; i < n; ++i)
    phi(i, 0) = trend->value(samples.points.row(i).transpose());
  const double scale = 1.0 + samples.values.cwiseAbs().maxCoeff();
  if (phi.cwiseAbs().maxCoeff() <= 1e-12 * scale)
    throw ZeroTrend("hierarchical: trend vanishes at every sample");
  return phi;
}

}  // namespace

HierarchicalModel::HierarchicalModel(GlsCore core, SurfacePtr trend)
    : core_(std::move(core)), trend_(std::move(trend)) {}

double HierarchicalModel::predict_expanded(const VectorXd& x) const {
  const SampleSet& s = core_.samples();
  const CorrelationConfig& corr = core_.corr();
  const int n = static_cast<int>(s.points.rows());

  MatrixXd r_mat(n, n);
  for (int i = 0; i < n; ++i) {
    r_mat(i, i) = 1.0 + corr.nugget;
    for (int j = i + 1; j < n; ++j) {
      const double v = correlation_value(
          (s.points.row(i) - s.points.row(j)).transpose(), corr);
      r_mat(i, j) = v;
      r_mat(j, i) = v;
    }
  }
  Eigen::PartialPivLU<MatrixXd> lu(r_mat);

  const VectorXd phi = core_.trend_matrix().col(0);
  const VectorXd rinv_phi = lu.solve(phi);
  const VectorXd rinv_y = lu.solve(s.values);
  const double beta = phi.dot(rinv_y) / phi.dot(rinv_phi);

  VectorXd r_vec(n);
  for (int i = 0; i < n; ++i)
    r_vec[i] =
        correlation_value((x.transpose() - s.points.row(i)).transpose(), corr);
  const VectorXd z_weights = lu.solve(s.values - beta * phi);
  return beta * trend_->value(x) + r_vec.dot(z_weights);
}

HierarchicalModel build_hk(const SampleSet& samples, SurfacePtr trend,
                           const CorrelationConfig& corr) {
  MatrixXd phi = trend_column(samples, trend);
  SurfacePtr kept = trend;
  auto eval = [kept](const VectorXd& x) {
    VectorXd f(1);
    f[0] = kept->value(x);
    return f;
  };
  GlsCore core(samples, std::move(phi), eval, corr);
  return HierarchicalModel(std::move(core), std::move(trend));
}

CorrelationConfig fit_hk_hyperparameters(const SampleSet& samples,
                                         const SurfacePtr& trend,
                                         const HyperFitConfig& cfg) {
  return fit_hyperparameters_gls(samples, trend_column(samples, trend), cfg);
}

}  // namespace gsm
