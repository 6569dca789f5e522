#include "gsm/sampling.hpp"

#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "gsm/errors.hpp"
#include "gsm/rng.hpp"

namespace gsm {
namespace {

// Parallel scan of score over the candidates, then a serial argmax with
// strict comparison, so the lowest index wins ties for any thread count.
// Candidates where score throws DomainEscape are skipped; other exceptions
// propagate.
VectorXd argmax_candidate(const std::function<double(const VectorXd&)>& score,
                          const CandidateGrid& grid) {
  const int total = static_cast<int>(grid.points.rows());
  if (total == 0)
    throw std::invalid_argument("adaptive step: empty candidate grid");

  VectorXd values(total);
  std::exception_ptr failure = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < total; ++i) {
    try {
      values[i] = score(grid.points.row(i).transpose());
    } catch (const DomainEscape&) {
      values[i] = -std::numeric_limits<double>::infinity();
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
      values[i] = -std::numeric_limits<double>::infinity();
    }
  }
  if (failure) std::rethrow_exception(failure);

  int best = 0;
  for (int i = 1; i < total; ++i)
    if (values[i] > values[best]) best = i;
  if (!std::isfinite(values[best]))
    throw DomainEscape("adaptive step: no evaluable candidate");
  return grid.points.row(best).transpose();
}

}  // namespace

MatrixXd latin_hypercube(int n, const Domain& domain, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("latin_hypercube: need n >= 1");
  const int d = domain.dim();
  Rng rng(seed);
  MatrixXd points(n, d);
  std::vector<int> perm(n);
  for (int k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int i = 0; i < n; ++i)
      points(i, k) = domain.lower[k] +
                     domain.edge(k) * (perm[i] + rng.uniform()) / n;
  }
  return points;
}

CandidateGrid CandidateGrid::tensor(const Domain& domain, int per_axis) {
  if (per_axis < 2)
    throw std::invalid_argument("CandidateGrid: per_axis must be >= 2");
  const int d = domain.dim();
  int total = 1;
  for (int k = 0; k < d; ++k) total *= per_axis;

  CandidateGrid grid;
  grid.points.resize(total, d);
  for (int i = 0; i < total; ++i) {
    int rem = i;
    for (int k = 0; k < d; ++k) {
      const int idx = rem % per_axis;
      rem /= per_axis;
      grid.points(i, k) =
          domain.lower[k] + domain.edge(k) * idx / (per_axis - 1.0);
    }
  }
  return grid;
}

CandidateGrid CandidateGrid::without(const MatrixXd& existing,
                                     double rel_tol) const {
  const int total = static_cast<int>(points.rows());
  std::vector<int> keep;
  keep.reserve(total);
  for (int i = 0; i < total; ++i) {
    bool taken = false;
    for (Eigen::Index s = 0; s < existing.rows() && !taken; ++s) {
      const double scale = std::max(
          1.0, std::max(points.row(i).cwiseAbs().maxCoeff(),
                        existing.row(s).cwiseAbs().maxCoeff()));
      taken = (points.row(i) - existing.row(s)).cwiseAbs().maxCoeff() <=
              rel_tol * scale;
    }
    if (!taken) keep.push_back(i);
  }
  CandidateGrid out;
  out.points.resize(static_cast<int>(keep.size()), points.cols());
  for (int i = 0; i < static_cast<int>(keep.size()); ++i)
    out.points.row(i) = points.row(keep[i]);
  return out;
}

VectorXd adaptive_mse_step(const KrigingModel& model,
                           const CandidateGrid& grid) {
  return argmax_candidate(
      [&](const VectorXd& x) { return model.predict_mse(x); }, grid);
}

VectorXd adaptive_mse_step(const HierarchicalModel& model,
                           const CandidateGrid& grid) {
  return argmax_candidate(
      [&](const VectorXd& x) { return model.predict_mse(x); }, grid);
}

VectorXd adaptive_discrepancy_step(const HierarchicalModel& hk,
                                   const KrigingModel& kriging,
                                   const CandidateGrid& grid) {
  return argmax_candidate(
      [&](const VectorXd& x) {
        return std::abs(hk.predict(x) - kriging.predict(x));
      },
      grid);
}

AdaptiveResult run_adaptive(const ResponseSurface& oracle, const Domain& domain,
                            const SampleSet& initial, const PodBasis* basis,
                            const AdaptiveConfig& cfg,
                            const ValidationGrid& validation) {
  initial.validate(domain);
  if (cfg.budget < static_cast<int>(initial.points.rows()))
    throw std::invalid_argument("run_adaptive: budget below initial samples");

  HyperFitConfig hyper = cfg.hyper;
  if (hyper.theta_lower.size() == 0) {
    const auto bounds = default_theta_bounds(domain);
    hyper.theta_lower = bounds.first;
    hyper.theta_upper = bounds.second;
  }
  const RegressionBasis constant{BasisKind::kConstant, domain.dim()};

  AdaptiveResult result;
  result.samples = initial;

  for (int step = 0;; ++step) {
    const CorrelationConfig corr_k =
        fit_hyperparameters(result.samples, constant, hyper);
    result.kriging = build_kriging(result.samples, constant, corr_k);

    result.hk.reset();
    result.gsm.reset();
    bool hk_failed = false;
    if (basis != nullptr) {
      try {
        GenericSurrogateModel gsm =
            gappy_fit_transformed(*basis, result.samples, cfg.gappy);
        auto trend = std::make_shared<GenericSurrogateModel>(gsm);
        const CorrelationConfig corr_h =
            cfg.refit_hk_theta
                ? fit_hk_hyperparameters(result.samples, trend, hyper)
                : corr_k;
        result.hk = build_hk(result.samples, trend, corr_h);
        result.gsm = std::move(gsm);
      } catch (const Error&) {
        hk_failed = true;
        result.hk.reset();
        result.gsm.reset();
      }
    }

    const ResponseSurface& assessed =
        result.hk ? static_cast<const ResponseSurface&>(*result.hk)
                  : static_cast<const ResponseSurface&>(result.kriging);
    const auto [eta1, etainf] = error_metrics(assessed, validation);

    AdaptiveRecord record;
    record.step = step;
    record.n = static_cast<int>(result.samples.points.rows());
    record.eta1 = eta1;
    record.etainf = etainf;
    record.hk_failed = hk_failed;
    result.trace.push_back(record);

    if (record.n >= cfg.budget) break;

    const CandidateGrid grid =
        CandidateGrid::tensor(domain, cfg.grid_per_axis)
            .without(result.samples.points);
    if (grid.points.rows() == 0) break;

    VectorXd xstar;
    if (cfg.strategy == AdaptiveStrategy::kMse) {
      xstar = result.hk ? adaptive_mse_step(*result.hk, grid)
                        : adaptive_mse_step(result.kriging, grid);
    } else {
      xstar = result.hk
                  ? adaptive_discrepancy_step(*result.hk, result.kriging, grid)
                  : adaptive_mse_step(result.kriging, grid);
    }
    result.trace.back().xstar = xstar;
    result.samples = result.samples.appended(xstar, oracle.value(xstar));
  }
  return result;
}

}  // namespace gsm
