#pragma once

#include "gsm/kriging.hpp"

namespace gsm {

// Kriging with a fitted surrogate as the single trend function: the scalar
// regression coefficient scales the trend and the correlation part
// interpolates what remains.
class HierarchicalModel final : public ResponseSurface {
 public:
  HierarchicalModel(GlsCore core, SurfacePtr trend);

  double value(const VectorXd& x) const override { return predict(x); }
  double predict(const VectorXd& x) const { return core_.predict(x); }
  double predict_mse(const VectorXd& x) const { return core_.predict_mse(x); }

  double beta() const { return core_.beta()[0]; }
  double sigma2() const { return core_.sigma2(); }
  const SampleSet& samples() const { return core_.samples(); }
  const CorrelationConfig& corr() const { return core_.corr(); }
  const SurfacePtr& trend() const { return trend_; }

  // Expanded predictor beta * t(x) + r(x)^T R^{-1} (y - beta * T), solved
  // densely from scratch on every call. Slow; kept as a cross-check against
  // the cached path.
  double predict_expanded(const VectorXd& x) const;

 private:
  GlsCore core_;
  SurfacePtr trend_;
};

// Throws ZeroTrend when the trend is numerically zero at every sample, in
// which case the caller should fall back to ordinary Kriging.
HierarchicalModel build_hk(const SampleSet& samples, SurfacePtr trend,
                           const CorrelationConfig& corr);

// Maximum likelihood correlation parameters with the trend values as the
// regression column. Needs at least two samples.
CorrelationConfig fit_hk_hyperparameters(const SampleSet& samples,
                                         const SurfacePtr& trend,
                                         const HyperFitConfig& cfg);

}  // namespace gsm
