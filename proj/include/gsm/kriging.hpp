#pragma once

#include <Eigen/Cholesky>
#include <functional>
#include <utility>

#include "gsm/domain.hpp"

namespace gsm {

enum class CorrFamily { kGaussian, kPowerExponential, kCubicSpline };

// Stationary product correlation over separations h in R^d. theta holds the
// inverse correlation lengths; nugget is added to the diagonal of R only.
struct CorrelationConfig {
  CorrFamily family = CorrFamily::kGaussian;
  VectorXd theta;
  double exponent = 2.0;  // power-exponential only, in [1, 2]
  double nugget = 0.0;

  void validate(int dim) const;
};

// Product of 1-D correlations; 1 at h = 0, decays to 0, even in each h[k].
double correlation_value(const VectorXd& h, const CorrelationConfig& corr);

enum class BasisKind { kConstant, kLinear };

// Polynomial trend basis: constant (K = 1) or linear (K = d + 1).
struct RegressionBasis {
  BasisKind kind = BasisKind::kConstant;
  int dim = 1;

  int count() const { return kind == BasisKind::kConstant ? 1 : dim + 1; }
  VectorXd eval(const VectorXd& x) const;
};

// Generalized least squares interpolation core shared by the ordinary
// Kriging model and the hierarchical model: trend coefficients are the BLUE
// against correlated residuals, the residual is interpolated through R.
// Immutable after construction; all + const member functions are safe to call
// concurrently.
class GlsCore {
 public:
  GlsCore() = default;

  // trend_at_samples is n x K; trend evaluates the same K functions at new
  // points. Escalates the nugget on factorization failure before giving up.
  GlsCore(SampleSet samples, MatrixXd trend_at_samples,
          std::function<VectorXd(const VectorXd&)> trend,
          CorrelationConfig corr);

  double predict(const VectorXd& x) const;
  double predict_mse(const VectorXd& x) const;

  // BLUE weights c(x): predict(x) == c(x) . values, F^T c(x) == f(x).
  VectorXd weights(const VectorXd& x) const;

  const SampleSet& samples() const { return samples_; }
  const CorrelationConfig& corr() const { return corr_; }  // effective nugget
  const VectorXd& beta() const { return beta_; }
  double sigma2() const { return sigma2_; }
  double logdet_r() const { return logdet_r_; }
  const MatrixXd& trend_matrix() const { return trend_values_; }

 private:
  VectorXd corr_vector(const VectorXd& x) const;
  void point_system(const VectorXd& x, VectorXd& c, VectorXd& mu) const;

  SampleSet samples_;
  MatrixXd trend_values_;  // F, n x K
  std::function<VectorXd(const VectorXd&)> trend_;
  CorrelationConfig corr_;
  Eigen::LLT<MatrixXd> r_chol_;
  Eigen::LLT<MatrixXd> gram_chol_;  // F^T R^-1 F
  MatrixXd rinv_f_;                 // R^-1 F
  VectorXd beta_;
  VectorXd resid_weights_;  // R^-1 (Y - F beta)
  double sigma2_ = 0.0;
  double logdet_r_ = 0.0;
};

class KrigingModel final : public ResponseSurface {
 public:
  KrigingModel() = default;
  KrigingModel(GlsCore core, RegressionBasis basis)
      : core_(std::move(core)), basis_(basis) {}

  double value(const VectorXd& x) const override { return core_.predict(x); }
  double predict(const VectorXd& x) const { return core_.predict(x); }
  double predict_mse(const VectorXd& x) const { return core_.predict_mse(x); }
  VectorXd weights(const VectorXd& x) const { return core_.weights(x); }

  const SampleSet& samples() const { return core_.samples(); }
  const CorrelationConfig& corr() const { return core_.corr(); }
  const RegressionBasis& basis() const { return basis_; }
  const VectorXd& beta() const { return core_.beta(); }
  double sigma2() const { return core_.sigma2(); }

 private:
  GlsCore core_;
  RegressionBasis basis_;
};

KrigingModel build_kriging(const SampleSet& samples,
                           const RegressionBasis& basis,
                           const CorrelationConfig& corr);

// Profile log likelihood of theta with beta and sigma^2 eliminated by their
// closed-form optima. The full form is the Gaussian density; the reduced
// form drops the constant: full = reduced - (n/2)(1 + log(2 pi)).
// Both throw SingularSystem if R fails to factor (no nugget escalation).
double log_likelihood_full(const SampleSet& samples,
                           const RegressionBasis& basis,
                           const CorrelationConfig& corr);
double log_likelihood_reduced(const SampleSet& samples,
                              const RegressionBasis& basis,
                              const CorrelationConfig& corr);

struct HyperFitConfig {
  CorrFamily family = CorrFamily::kGaussian;
  double exponent = 2.0;
  double nugget = 0.0;
  VectorXd theta_lower;  // empty: derived from the sample bounding box
  VectorXd theta_upper;
  int multistarts = 5;
  double rel_tol = 1e-6;
  int max_sweeps = 200;
};

// theta_k in [1e-2 / L_k^2, 1e2 / L_k^2] for edge lengths L_k.
std::pair<VectorXd, VectorXd> default_theta_bounds(const Domain& domain);

// Maximizes the reduced log likelihood over theta inside the bound box.
// Deterministic: fixed log-spaced multistarts plus coordinate search in
// log(theta). Starts whose initial point fails to factor are discarded;
// AllStartsFailed if none survives.
CorrelationConfig fit_hyperparameters(const SampleSet& samples,
                                      const RegressionBasis& basis,
                                      const HyperFitConfig& cfg = {});

// Same search against an explicit trend matrix (used by the hierarchical
// model, whose trend is a fitted surrogate rather than polynomials).
CorrelationConfig fit_hyperparameters_gls(const SampleSet& samples,
                                          const MatrixXd& trend_at_samples,
                                          const HyperFitConfig& cfg);

}  // namespace gsm
