#include "gsm/kriging.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gsm {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double spline1(double z) {
  if (z <= 0.2) return 1.0 - 15.0 * z * z + 30.0 * z * z * z;
  if (z < 1.0) {
    const double t = 1.0 - z;
    return 1.25 * t * t * t;
  }
  return 0.0;
}

MatrixXd corr_matrix(const MatrixXd& pts, const CorrelationConfig& corr) {
  const int n = static_cast<int>(pts.rows());
  MatrixXd r(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    r(i, i) = 1.0 + corr.nugget;
    for (int j = i + 1; j < n; ++j) {
      const double v =
          correlation_value((pts.row(i) - pts.row(j)).transpose(), corr);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

double sigma2_floor(const VectorXd& y) {
  const int n = static_cast<int>(y.size());
  return 1e-30 * std::max(1.0, y.squaredNorm() / n);
}

struct GlsQuantities {
  bool ok = false;
  double sigma2 = 0.0;
  double logdet = 0.0;
};

// Profiled quantities for the likelihood at fixed theta, no nugget
// escalation. ok=false when a factorization fails.
GlsQuantities gls_quantities(const MatrixXd& pts, const VectorXd& y,
                             const MatrixXd& f, const CorrelationConfig& corr) {
  GlsQuantities q;
  const int n = static_cast<int>(pts.rows());
  Eigen::LLT<MatrixXd> chol(corr_matrix(pts, corr));
  if (chol.info() != Eigen::Success) return q;
  const MatrixXd rinv_f = chol.solve(f);
  MatrixXd gram = f.transpose() * rinv_f;
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::LLT<MatrixXd> gram_chol(gram);
  if (gram_chol.info() != Eigen::Success) return q;
  const VectorXd beta = gram_chol.solve(rinv_f.transpose() * y);
  const VectorXd resid = y - f * beta;
  q.sigma2 = std::max(resid.dot(chol.solve(resid)) / n, sigma2_floor(y));
  q.logdet = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
  q.ok = true;
  return q;
}

// Negative reduced log likelihood as a function of log(theta); +inf when a
// factorization fails.
double neg_log_likelihood(const MatrixXd& pts, const VectorXd& y,
                          const MatrixXd& f, const HyperFitConfig& cfg,
                          const VectorXd& log_theta) {
  CorrelationConfig corr;
  corr.family = cfg.family;
  corr.exponent = cfg.exponent;
  corr.nugget = cfg.nugget;
  corr.theta = log_theta.array().exp();
  const GlsQuantities q = gls_quantities(pts, y, f, corr);
  if (!q.ok) return kInf;
  const int n = static_cast<int>(pts.rows());
  return 0.5 * (n * std::log(q.sigma2) + q.logdet);
}

// Greedy coordinate descent with step halving inside a box. Deterministic.
template <class Fn>
void coordinate_search(const Fn& fn, const VectorXd& lo, const VectorXd& hi,
                       double rel_tol, int max_sweeps, VectorXd& x,
                       double& fx) {
  const int d = static_cast<int>(x.size());
  VectorXd step = (hi - lo) / 8.0;
  const VectorXd range = (hi - lo).cwiseMax(1e-300);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double f_before = fx;
    bool improved = false;
    for (int k = 0; k < d; ++k) {
      for (const double sgn : {1.0, -1.0}) {
        VectorXd cand = x;
        cand[k] = std::clamp(x[k] + sgn * step[k], lo[k], hi[k]);
        if (cand[k] == x[k]) continue;
        const double fc = fn(cand);
        if (fc < fx) {
          x = cand;
          fx = fc;
          improved = true;
          break;
        }
      }
    }
    const bool stalled =
        !improved || (f_before - fx) <= rel_tol * (1.0 + std::abs(fx));
    if (stalled) {
      step *= 0.5;
      if ((step.array() / range.array()).maxCoeff() < 1e-6) break;
    }
  }
}

std::pair<VectorXd, VectorXd> bounds_from_box(const VectorXd& lo,
                                              const VectorXd& hi) {
  const int d = static_cast<int>(lo.size());
  VectorXd tlo(d), thi(d);
  for (int k = 0; k < d; ++k) {
    const double edge = std::max(hi[k] - lo[k], 1e-8 * (1.0 + std::abs(hi[k])));
    tlo[k] = 1e-2 / (edge * edge);
    thi[k] = 1e2 / (edge * edge);
  }
  return {tlo, thi};
}

}  // namespace

void CorrelationConfig::validate(int dim) const {
  if (theta.size() != dim)
    throw std::invalid_argument("CorrelationConfig: theta dimension mismatch");
  if ((theta.array() <= 0.0).any() || !theta.allFinite())
    throw std::invalid_argument("CorrelationConfig: theta must be positive");
  if (nugget < 0.0 || !std::isfinite(nugget))
    throw std::invalid_argument("CorrelationConfig: nugget must be >= 0");
  if (family == CorrFamily::kPowerExponential &&
      (exponent < 1.0 || exponent > 2.0))
    throw std::invalid_argument(
        "CorrelationConfig: power exponent must lie in [1, 2]");
}

double correlation_value(const VectorXd& h, const CorrelationConfig& corr) {
  if (h.size() != corr.theta.size())
    throw std::invalid_argument("correlation_value: dimension mismatch");
  switch (corr.family) {
    case CorrFamily::kGaussian:
      return std::exp(-(corr.theta.array() * h.array().square()).sum());
    case CorrFamily::kPowerExponential:
      return std::exp(
          -(corr.theta.array() * h.array().abs().pow(corr.exponent)).sum());
    case CorrFamily::kCubicSpline: {
      double prod = 1.0;
      for (int k = 0; k < h.size(); ++k) {
        prod *= spline1(corr.theta[k] * std::abs(h[k]));
        if (prod == 0.0) break;
      }
      return prod;
    }
  }
  throw std::logic_error("correlation_value: unknown family");
}

VectorXd RegressionBasis::eval(const VectorXd& x) const {
  if (x.size() != dim)
    throw std::invalid_argument("RegressionBasis: dimension mismatch");
  if (kind == BasisKind::kConstant) return VectorXd::Ones(1);
  VectorXd f(dim + 1);
  f[0] = 1.0;
  f.tail(dim) = x;
  return f;
}

GlsCore::GlsCore(SampleSet samples, MatrixXd trend_at_samples,
                 std::function<VectorXd(const VectorXd&)> trend,
                 CorrelationConfig corr)
    : samples_(std::move(samples)),
      trend_values_(std::move(trend_at_samples)),
      trend_(std::move(trend)),
      corr_(std::move(corr)) {
  samples_.validate();
  corr_.validate(samples_.dim());
  const int n = samples_.size();
  const int num_trend = static_cast<int>(trend_values_.cols());
  if (trend_values_.rows() != n)
    throw std::invalid_argument("GlsCore: trend matrix row count mismatch");
  if (n < num_trend)
    throw RankDeficientRegression(
        "fewer samples than trend functions (n < K)");
  if (!trend_values_.allFinite())
    throw std::invalid_argument("GlsCore: non-finite trend values");

  CorrelationConfig base = corr_;
  base.nugget = 0.0;
  const MatrixXd r0 = corr_matrix(samples_.points, base);
  const double diag_scale = r0.trace() / n;
  bool factored = false;
  for (const double mult : {0.0, 1e-12, 1e-10, 1e-8, 1e-6}) {
    const double nugget = corr_.nugget + mult * diag_scale;
    MatrixXd r = r0;
    r.diagonal().array() += nugget;
    r_chol_.compute(r);
    if (r_chol_.info() == Eigen::Success) {
      corr_.nugget = nugget;
      factored = true;
      break;
    }
  }
  if (!factored)
    throw SingularSystem(
        "correlation matrix not positive definite after nugget escalation");

  logdet_r_ = 2.0 * r_chol_.matrixLLT().diagonal().array().log().sum();
  rinv_f_ = r_chol_.solve(trend_values_);
  MatrixXd gram = trend_values_.transpose() * rinv_f_;
  gram = 0.5 * (gram + gram.transpose()).eval();
  gram_chol_.compute(gram);
  if (gram_chol_.info() != Eigen::Success)
    throw RankDeficientRegression("trend normal matrix is singular");
  beta_ = gram_chol_.solve(rinv_f_.transpose() * samples_.values);
  const VectorXd resid = samples_.values - trend_values_ * beta_;
  resid_weights_ = r_chol_.solve(resid);
  sigma2_ = std::max(0.0, resid.dot(resid_weights_) / n);
}

VectorXd GlsCore::corr_vector(const VectorXd& x) const {
  CorrelationConfig base = corr_;
  base.nugget = 0.0;
  const int n = samples_.size();
  VectorXd r(n);
  for (int i = 0; i < n; ++i)
    r[i] = correlation_value(x - samples_.points.row(i).transpose(), base);
  return r;
}

double GlsCore::predict(const VectorXd& x) const {
  return corr_vector(x).dot(resid_weights_) + trend_(x).dot(beta_);
}

void GlsCore::point_system(const VectorXd& x, VectorXd& c,
                           VectorXd& mu) const {
  const VectorXd r = corr_vector(x);
  const VectorXd f = trend_(x);
  mu = gram_chol_.solve(rinv_f_.transpose() * r - f);
  c = r_chol_.solve(r - trend_values_ * mu);
}

double GlsCore::predict_mse(const VectorXd& x) const {
  VectorXd c, mu;
  point_system(x, c, mu);
  const double quad =
      corr_vector(x).dot(c) + trend_(x).dot(mu);
  return std::max(0.0, sigma2_ * (1.0 - quad));
}

VectorXd GlsCore::weights(const VectorXd& x) const {
  VectorXd c, mu;
  point_system(x, c, mu);
  return c;
}

KrigingModel build_kriging(const SampleSet& samples,
                           const RegressionBasis& basis,
                           const CorrelationConfig& corr) {
  if (basis.dim != samples.dim())
    throw std::invalid_argument("build_kriging: basis dimension mismatch");
  const int n = samples.size();
  MatrixXd f(n, basis.count());
  for (int i = 0; i < n; ++i)
    f.row(i) = basis.eval(samples.points.row(i).transpose()).transpose();
  RegressionBasis b = basis;
  GlsCore core(samples, std::move(f),
               [b](const VectorXd& x) { return b.eval(x); }, corr);
  return KrigingModel(std::move(core), basis);
}

double log_likelihood_full(const SampleSet& samples,
                           const RegressionBasis& basis,
                           const CorrelationConfig& corr) {
  const int n = samples.size();
  const double reduced = log_likelihood_reduced(samples, basis, corr);
  return reduced - 0.5 * n * (1.0 + std::log(2.0 * kPi));
}

double log_likelihood_reduced(const SampleSet& samples,
                              const RegressionBasis& basis,
                              const CorrelationConfig& corr) {
  samples.validate();
  corr.validate(samples.dim());
  const int n = samples.size();
  MatrixXd f(n, basis.count());
  for (int i = 0; i < n; ++i)
    f.row(i) = basis.eval(samples.points.row(i).transpose()).transpose();
  const GlsQuantities q =
      gls_quantities(samples.points, samples.values, f, corr);
  if (!q.ok)
    throw SingularSystem("likelihood: correlation matrix failed to factor");
  return -0.5 * (n * std::log(q.sigma2) + q.logdet);
}

std::pair<VectorXd, VectorXd> default_theta_bounds(const Domain& domain) {
  return bounds_from_box(domain.lower, domain.upper);
}

CorrelationConfig fit_hyperparameters_gls(const SampleSet& samples,
                                          const MatrixXd& trend_at_samples,
                                          const HyperFitConfig& cfg) {
  samples.validate();
  const int n = samples.size();
  const int d = samples.dim();
  const int num_trend = static_cast<int>(trend_at_samples.cols());
  if (n < num_trend + 1)
    throw std::invalid_argument("fit_hyperparameters: need n >= K + 1");

  VectorXd tlo = cfg.theta_lower, thi = cfg.theta_upper;
  if (tlo.size() == 0 || thi.size() == 0) {
    auto b = bounds_from_box(samples.points.colwise().minCoeff().transpose(),
                             samples.points.colwise().maxCoeff().transpose());
    if (tlo.size() == 0) tlo = b.first;
    if (thi.size() == 0) thi = b.second;
  }
  if (tlo.size() != d || thi.size() != d || (tlo.array() <= 0.0).any() ||
      (tlo.array() >= thi.array()).any())
    throw std::invalid_argument("fit_hyperparameters: invalid theta bounds");

  const VectorXd log_lo = tlo.array().log();
  const VectorXd log_hi = thi.array().log();
  const auto nll = [&](const VectorXd& log_theta) {
    return neg_log_likelihood(samples.points, samples.values, trend_at_samples,
                              cfg, log_theta);
  };

  bool any_start = false;
  VectorXd best;
  double fbest = kInf;
  const int starts = std::max(1, cfg.multistarts);
  for (int s = 0; s < starts; ++s) {
    const double t = (s + 0.5) / starts;
    VectorXd x = log_lo + t * (log_hi - log_lo);
    double fx = nll(x);
    if (!std::isfinite(fx)) continue;
    any_start = true;
    coordinate_search(nll, log_lo, log_hi, cfg.rel_tol, cfg.max_sweeps, x, fx);
    if (fx < fbest) {
      fbest = fx;
      best = x;
    }
  }
  if (!any_start)
    throw AllStartsFailed(
        "every hyperparameter start failed to factor the correlation matrix");

  CorrelationConfig out;
  out.family = cfg.family;
  out.exponent = cfg.exponent;
  out.nugget = cfg.nugget;
  out.theta = best.array().exp();
  return out;
}

CorrelationConfig fit_hyperparameters(const SampleSet& samples,
                                      const RegressionBasis& basis,
                                      const HyperFitConfig& cfg) {
  if (basis.dim != samples.dim())
    throw std::invalid_argument("fit_hyperparameters: basis dimension mismatch");
  const int n = samples.size();
  MatrixXd f(n, basis.count());
  for (int i = 0; i < n; ++i)
    f.row(i) = basis.eval(samples.points.row(i).transpose()).transpose();
  return fit_hyperparameters_gls(samples, f, cfg);
}

}  // namespace gsm
