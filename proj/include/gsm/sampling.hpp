#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gsm/gappy.hpp"
#include "gsm/hierarchical.hpp"
#include "gsm/testbed.hpp"

namespace gsm {

// Latin hypercube: one point per axis stratum, uniformly jittered inside it,
// strata permuted independently per axis. Deterministic for a fixed seed.
MatrixXd latin_hypercube(int n, const Domain& domain, std::uint64_t seed);

struct CandidateGrid {
  MatrixXd points;

  // Tensor grid with per_axis points per axis, endpoints included.
  static CandidateGrid tensor(const Domain& domain, int per_axis);

  // Copy with every point within rel_tol (max norm, scaled) of a row of
  // existing removed.
  CandidateGrid without(const MatrixXd& existing, double rel_tol = 1e-9) const;
};

// Candidate maximizing the prediction variance; ties resolve to the lowest
// index. Candidates where the model cannot be evaluated are skipped.
VectorXd adaptive_mse_step(const KrigingModel& model, const CandidateGrid& grid);
VectorXd adaptive_mse_step(const HierarchicalModel& model,
                           const CandidateGrid& grid);

// Candidate where the hierarchical and ordinary predictions disagree most.
VectorXd adaptive_discrepancy_step(const HierarchicalModel& hk,
                                   const KrigingModel& kriging,
                                   const CandidateGrid& grid);

enum class AdaptiveStrategy { kMse, kDiscrepancy };

struct AdaptiveConfig {
  AdaptiveStrategy strategy = AdaptiveStrategy::kMse;
  int budget = 20;         // total samples, initial ones included
  int grid_per_axis = 40;  // candidate grid resolution
  HyperFitConfig hyper;    // bounds default to the run domain when empty
  GappyConfig gappy;
  bool refit_hk_theta = true;  // false: reuse the ordinary Kriging fit
};

struct AdaptiveRecord {
  int step = 0;
  int n = 0;  // samples at assessment time
  double eta1 = 0.0;
  double etainf = 0.0;
  bool hk_failed = false;            // hierarchical build fell back
  std::optional<VectorXd> xstar;     // absent on the final record
};

struct AdaptiveResult {
  SampleSet samples;
  std::vector<AdaptiveRecord> trace;
  KrigingModel kriging;
  std::optional<HierarchicalModel> hk;
  std::optional<GenericSurrogateModel> gsm;
};

// Grows the sample set to the budget. Every stage refits the correlation
// parameters and, when a basis is given, the surrogate trend; the stage is
// assessed against the validation grid before the next point is chosen. A
// failed hierarchical build falls back to ordinary Kriging for that stage
// and is recorded. basis may be null for a Kriging-only run.
AdaptiveResult run_adaptive(const ResponseSurface& oracle, const Domain& domain,
                            const SampleSet& initial, const PodBasis* basis,
                            const AdaptiveConfig& cfg,
                            const ValidationGrid& validation);

}  // namespace gsm
