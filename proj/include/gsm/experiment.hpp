#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsm/sampling.hpp"

namespace gsm {

enum class Method { kKriging, kHkGsm, kHkGsmNoAlign };

const char* method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct ExperimentConfig {
  std::vector<Method> methods{Method::kKriging, Method::kHkGsm,
                              Method::kHkGsmNoAlign};
  std::vector<int> sizes{5, 7, 10, 15, 20, 30, 40, 50};
  int repeats = 10;
  std::uint64_t seed_base = 1;
  double pod_threshold = 0.999;
  double align_delta = -1.0;  // negative: default rule
  GappyConfig gappy;
  HyperFitConfig hyper;  // empty bounds default to the run domain
  int validation_per_axis = 40;
  int quad_per_axis = 33;
};

struct ExperimentRow {
  Method method = Method::kKriging;
  int size = 0;
  int repeat = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;  // failure code, empty when ok
  double eta1 = 0.0;
  double etainf = 0.0;
};

struct ExperimentAggregate {
  Method method = Method::kKriging;
  int size = 0;
  int count = 0;  // successful rows entering the mean
  double mean_eta1 = 0.0;
  double mean_etainf = 0.0;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentAggregate> aggregates;
  double pre_align_ssd = 0.0;
  double post_align_ssd = 0.0;
  int rank_aligned = 0;    // 0 when no aligned method ran
  int rank_unaligned = 0;  // 0 when no unaligned method ran
};

// In-family function outside the database: the perturbed second member of a
// fresh undistorted family. Standard target for experiments and adaptive
// runs.
SurfacePtr held_out_member(std::uint64_t seed);

// Sweep over methods x sizes x repeats against a held-out target function.
// Every cell of a given (size, repeat) shares one Latin hypercube sample of
// the target, seeded with seed_base + 1000 * size_index + repeat. Alignment
// and the basis are computed once per run. Failed cells are recorded with
// their error code and the sweep continues.
ExperimentReport run_experiment(const SyntheticDatabase& db,
                                const ResponseSurface& target,
                                const ExperimentConfig& cfg);

// Long-format CSV, one row per cell, doubles printed round-trip exact.
// Byte-identical for identical configs.
std::string experiment_csv(const ExperimentReport& report);

// Adaptive trace rows: step, sample count, strategy, both error norms and
// the chosen refinement point (empty on the final assessment row).
std::string adaptive_trace_csv(const AdaptiveResult& result,
                               AdaptiveStrategy strategy);

}  // namespace gsm
