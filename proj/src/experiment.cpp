#include "gsm/experiment.hpp"

#include <algorithm>
#include <memory>
#include <sstream>
#include <utility>

#include "gsm/io.hpp"

namespace gsm {
namespace {

AlignedDatabase identity_database(const SyntheticDatabase& db) {
  AlignedDatabase out{db.entries,
                      std::vector<TransformQ>(
                          db.entries.size(),
                          TransformQ::identity(db.domain.dim())),
                      db.domain, db.domain.inflated(kDomainExtension)};
  out.validate();
  return out;
}

std::string failure_code(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return err->code();
  return e.what();
}

// One fitted model assessed against the validation grid.
ExperimentRow run_cell(Method method, const SampleSet& samples,
                       const PodBasis* basis, const ExperimentConfig& cfg,
                       const HyperFitConfig& hyper,
                       const ValidationGrid& validation) {
  ExperimentRow row;
  row.method = method;
  try {
    std::pair<double, double> metrics;
    if (method == Method::kKriging) {
      const RegressionBasis trend{BasisKind::kConstant, samples.dim()};
      const CorrelationConfig corr =
          fit_hyperparameters(samples, trend, hyper);
      const KrigingModel model = build_kriging(samples, trend, corr);
      metrics = error_metrics(model, validation);
    } else {
      const auto gsm_model = std::make_shared<GenericSurrogateModel>(
          gappy_fit_transformed(*basis, samples, cfg.gappy));
      const CorrelationConfig corr =
          fit_hk_hyperparameters(samples, gsm_model, hyper);
      const HierarchicalModel model = build_hk(samples, gsm_model, corr);
      metrics = error_metrics(model, validation);
    }
    row.ok = true;
    row.eta1 = metrics.first;
    row.etainf = metrics.second;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = failure_code(e);
  }
  return row;
}

}  // namespace

SurfacePtr held_out_member(std::uint64_t seed) {
  return build_synthetic_database(2, seed, false).entries[1];
}

const char* method_name(Method m) {
  switch (m) {
    case Method::kKriging:
      return "kriging";
    case Method::kHkGsm:
      return "hk-gsm";
    case Method::kHkGsmNoAlign:
      return "hk-gsm-noalign";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "kriging") return Method::kKriging;
  if (name == "hk-gsm") return Method::kHkGsm;
  if (name == "hk-gsm-noalign") return Method::kHkGsmNoAlign;
  return std::nullopt;
}

ExperimentReport run_experiment(const SyntheticDatabase& db,
                                const ResponseSurface& target,
                                const ExperimentConfig& cfg) {
  if (cfg.sizes.empty() || cfg.methods.empty())
    throw ConfigError("experiment needs at least one size and one method");
  for (const int n : cfg.sizes)
    if (n < 1) throw ConfigError("sample sizes must be positive");
  if (cfg.repeats < 1) throw ConfigError("repeats must be positive");

  const Domain& domain = db.domain;
  const bool want_aligned =
      std::count(cfg.methods.begin(), cfg.methods.end(), Method::kHkGsm) > 0;
  const bool want_unaligned =
      std::count(cfg.methods.begin(), cfg.methods.end(),
                 Method::kHkGsmNoAlign) > 0;

  ExperimentReport report;
  std::optional<PodBasis> pod_aligned;
  std::optional<PodBasis> pod_unaligned;
  if (want_aligned || want_unaligned) {
    const QuadratureRule quad =
        QuadratureRule::tensor_trapezoid(domain, cfg.quad_per_axis);
    const PodConfig pod_cfg{cfg.pod_threshold, false};
    if (want_aligned) {
      const double delta = cfg.align_delta >= 0.0
                               ? cfg.align_delta
                               : default_alignment_delta(db.entries, quad);
      report.pre_align_ssd = ssd_objective(identity_database(db), quad, 0.0);
      const AlignedDatabase aligned =
          align_database(db.entries, domain, quad, delta);
      report.post_align_ssd = ssd_objective(aligned, quad, 0.0);
      pod_aligned =
          compute_pod(aligned, covariance_matrix(aligned, quad), pod_cfg);
      report.rank_aligned = pod_aligned->rank;
    }
    if (want_unaligned) {
      const AlignedDatabase plain = identity_database(db);
      pod_unaligned =
          compute_pod(plain, covariance_matrix(plain, quad), pod_cfg);
      report.rank_unaligned = pod_unaligned->rank;
    }
  }

  const ValidationGrid validation =
      ValidationGrid::build(target, domain, cfg.validation_per_axis);
  HyperFitConfig hyper = cfg.hyper;
  if (hyper.theta_lower.size() == 0)
    std::tie(hyper.theta_lower, hyper.theta_upper) =
        default_theta_bounds(domain);

  for (std::size_t si = 0; si < cfg.sizes.size(); ++si) {
    const int n = cfg.sizes[si];
    for (int repeat = 0; repeat < cfg.repeats; ++repeat) {
      const std::uint64_t seed = cfg.seed_base + 1000 * si + repeat;
      SampleSet samples;
      samples.points = latin_hypercube(n, domain, seed);
      samples.values.resize(n);
      for (int i = 0; i < n; ++i)
        samples.values[i] = target.value(samples.points.row(i).transpose());

      for (const Method method : cfg.methods) {
        const PodBasis* basis = method == Method::kHkGsm ? &*pod_aligned
                                : method == Method::kHkGsmNoAlign
                                    ? &*pod_unaligned
                                    : nullptr;
        ExperimentRow row =
            run_cell(method, samples, basis, cfg, hyper, validation);
        row.size = n;
        row.repeat = repeat;
        row.seed = seed;
        report.rows.push_back(std::move(row));
      }
    }
  }

  for (const Method method : cfg.methods) {
    for (const int n : cfg.sizes) {
      ExperimentAggregate agg;
      agg.method = method;
      agg.size = n;
      for (const ExperimentRow& row : report.rows) {
        if (row.method != method || row.size != n || !row.ok) continue;
        ++agg.count;
        agg.mean_eta1 += row.eta1;
        agg.mean_etainf += row.etainf;
      }
      if (agg.count > 0) {
        agg.mean_eta1 /= agg.count;
        agg.mean_etainf /= agg.count;
      }
      report.aggregates.push_back(agg);
    }
  }
  return report;
}

std::string experiment_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "method,size,repeat,seed,status,eta1,etainf\n";
  for (const ExperimentRow& row : report.rows) {
    out << method_name(row.method) << ',' << row.size << ',' << row.repeat
        << ',' << row.seed << ',';
    if (row.ok) {
      out << "ok," << io::format_double(row.eta1) << ','
          << io::format_double(row.etainf);
    } else {
      std::string code = row.error;
      std::replace(code.begin(), code.end(), ',', ';');
      out << "failed:" << code << ",,";
    }
    out << '\n';
  }
  return out.str();
}

std::string adaptive_trace_csv(const AdaptiveResult& result,
                               AdaptiveStrategy strategy) {
  const char* name =
      strategy == AdaptiveStrategy::kMse ? "mse" : "discrepancy";
  const int dim = result.samples.dim();
  std::ostringstream out;
  out << "step,n,strategy,eta1,etainf";
  for (int k = 0; k < dim; ++k) out << ",x" << k;
  out << '\n';
  for (const AdaptiveRecord& rec : result.trace) {
    out << rec.step << ',' << rec.n << ',' << name << ','
        << io::format_double(rec.eta1) << ',' << io::format_double(rec.etainf);
    for (int k = 0; k < dim; ++k) {
      out << ',';
      if (rec.xstar) out << io::format_double((*rec.xstar)[k]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace gsm
