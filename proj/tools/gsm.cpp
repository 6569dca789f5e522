// Command-line front end for the surrogate-modeling pipeline: database
// generation, alignment, basis computation, surrogate fits, predictions,
// sampling-plan experiments and adaptive runs. Configuration comes from an
// optional JSON file plus flags; flags win. Errors leave as JSON on stderr
// with a nonzero exit code. OMP_NUM_THREADS (or --threads) bounds the
// OpenMP worker count.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "gsm/experiment.hpp"
#include "gsm/io.hpp"
#include "gsm/sampling.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Settings {
  std::string config_path;
  int threads = 0;  // 0: leave the OpenMP default alone

  std::string db_dir;
  std::string out;
  std::string pod_path;   // empty: <db>/pod.json
  std::string gsm_path;   // empty: <db>/gsm.json
  std::string samples_path;

  int members = 4;
  std::uint64_t seed = 7;
  bool distort = true;

  double align_delta = -1.0;
  int quad_per_axis = 33;

  double threshold = 0.999;
  bool mean_center = false;

  double gappy_delta = -1.0;

  std::vector<std::string> at;
  int grid = 0;

  std::vector<int> sizes{5, 7, 10, 15, 20, 30, 40, 50};
  int repeats = 10;
  std::uint64_t seed_base = 1;
  std::uint64_t target_seed = 2309;
  std::vector<std::string> methods{"kriging", "hk-gsm", "hk-gsm-noalign"};
  int validation = 40;

  std::string strategy = "mse";
  int budget = 20;
  int initial = 5;
  int grid_per_axis = 40;
  bool kriging_only = false;
};

void apply_config(const std::string& path, Settings& s) {
  std::ifstream in(path);
  if (!in.is_open()) throw gsm::ConfigError("cannot open config " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw gsm::ConfigError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object())
    throw gsm::ConfigError("config " + path + ": expected an object");
  try {
    for (const auto& [key, value] : cfg.items()) {
      if (key == "threads") s.threads = value.get<int>();
      else if (key == "db") s.db_dir = value.get<std::string>();
      else if (key == "out") s.out = value.get<std::string>();
      else if (key == "pod") s.pod_path = value.get<std::string>();
      else if (key == "model") s.gsm_path = value.get<std::string>();
      else if (key == "samples") s.samples_path = value.get<std::string>();
      else if (key == "members") s.members = value.get<int>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else if (key == "distort") s.distort = value.get<bool>();
      else if (key == "align-delta") s.align_delta = value.get<double>();
      else if (key == "quad") s.quad_per_axis = value.get<int>();
      else if (key == "threshold") s.threshold = value.get<double>();
      else if (key == "mean-center") s.mean_center = value.get<bool>();
      else if (key == "gappy-delta") s.gappy_delta = value.get<double>();
      else if (key == "grid") s.grid = value.get<int>();
      else if (key == "sizes") s.sizes = value.get<std::vector<int>>();
      else if (key == "repeats") s.repeats = value.get<int>();
      else if (key == "seed-base") s.seed_base = value.get<std::uint64_t>();
      else if (key == "target-seed")
        s.target_seed = value.get<std::uint64_t>();
      else if (key == "methods")
        s.methods = value.get<std::vector<std::string>>();
      else if (key == "validation") s.validation = value.get<int>();
      else if (key == "strategy") s.strategy = value.get<std::string>();
      else if (key == "budget") s.budget = value.get<int>();
      else if (key == "initial") s.initial = value.get<int>();
      else if (key == "grid-per-axis") s.grid_per_axis = value.get<int>();
      else if (key == "kriging-only") s.kriging_only = value.get<bool>();
      else
        throw gsm::ConfigError("config " + path + ": unknown key \"" + key +
                               "\"");
    }
  } catch (const gsm::Error&) {
    throw;
  } catch (const json::exception& e) {
    throw gsm::ConfigError("config " + path + ": " + e.what());
  }
}

std::string pod_path(const Settings& s) {
  return s.pod_path.empty() ? s.db_dir + "/pod.json" : s.pod_path;
}
std::string gsm_path(const Settings& s) {
  return s.gsm_path.empty() ? s.db_dir + "/gsm.json" : s.gsm_path;
}

void emit(const json& doc) { std::cout << doc.dump(2) << '\n'; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out.is_open()) throw gsm::ConfigError("cannot write " + path);
  out << text;
  if (!out.good()) throw gsm::ConfigError("write failed for " + path);
}

void write_runtime(const std::string& path, double wall_seconds) {
  std::ofstream out(path);
  if (out.is_open()) out << json{{"wall_seconds", wall_seconds}}.dump(2) << '\n';
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

gsm::QuadratureRule quadrature(const gsm::Domain& domain, int per_axis) {
  return gsm::QuadratureRule::tensor_trapezoid(domain, per_axis);
}

int cmd_gen_db(const Settings& s) {
  if (s.members < 2)
    throw gsm::ConfigError("a database needs at least 2 members");
  if (s.out.empty()) throw gsm::ConfigError("gen-db needs --out");
  const gsm::SyntheticDatabase db =
      gsm::build_synthetic_database(s.members, s.seed, s.distort);
  gsm::io::write_database(s.out, db, s.seed);
  const gsm::io::DatabaseDir dir = gsm::io::load_database(s.out);
  emit(json{{"command", "gen-db"},
            {"dir", s.out},
            {"m", s.members},
            {"distorted", s.distort},
            {"manifest_hash", dir.manifest_hash}});
  return 0;
}

int cmd_align(const Settings& s) {
  if (s.db_dir.empty()) throw gsm::ConfigError("align needs --db");
  const gsm::io::DatabaseDir dir = gsm::io::load_database(s.db_dir);
  const gsm::SyntheticDatabase& db = dir.synthetic;
  const gsm::QuadratureRule quad = quadrature(db.domain, s.quad_per_axis);
  const double delta =
      s.align_delta >= 0.0
          ? s.align_delta
          : gsm::default_alignment_delta(db.entries, quad);
  const double pre = gsm::ssd_objective(dir.database(), quad, 0.0);
  const gsm::AlignedDatabase aligned =
      gsm::align_database(db.entries, db.domain, quad, delta);
  const double post = gsm::ssd_objective(aligned, quad, 0.0);
  const std::string hash =
      gsm::io::update_transforms(s.db_dir, aligned.transforms);
  emit(json{{"command", "align"},
            {"db", s.db_dir},
            {"delta", delta},
            {"pre_ssd", pre},
            {"post_ssd", post},
            {"manifest_hash", hash}});
  return 0;
}

int cmd_pod(const Settings& s) {
  if (s.db_dir.empty()) throw gsm::ConfigError("pod needs --db");
  const gsm::io::DatabaseDir dir = gsm::io::load_database(s.db_dir);
  const gsm::AlignedDatabase db = dir.database();
  const gsm::QuadratureRule quad = quadrature(db.domain, s.quad_per_axis);
  gsm::PodConfig cfg;
  cfg.threshold = s.threshold;
  cfg.mean_center = s.mean_center;
  const gsm::PodBasis basis = gsm::compute_pod(
      db, gsm::covariance_matrix(db, quad, cfg.mean_center), cfg);
  const std::string path = pod_path(s);
  const std::string hash =
      gsm::io::write_pod(path, basis, dir.manifest_hash);
  emit(json{{"command", "pod"},
            {"file", path},
            {"rank", basis.rank},
            {"eigenvalues", gsm::io::to_json(basis.eigenvalues)},
            {"hash", hash}});
  return 0;
}

int cmd_fit_gsm(const Settings& s) {
  if (s.db_dir.empty()) throw gsm::ConfigError("fit-gsm needs --db");
  if (s.samples_path.empty())
    throw gsm::ConfigError("fit-gsm needs --samples");
  const gsm::io::DatabaseDir dir = gsm::io::load_database(s.db_dir);
  const gsm::PodBasis basis = gsm::io::load_pod(pod_path(s), dir);
  const std::string pod_hash =
      gsm::io::read_artifact(pod_path(s)).at("hash").get<std::string>();
  const gsm::SampleSet samples =
      gsm::io::read_samples_csv(s.samples_path, basis.dim());
  gsm::GappyConfig cfg;
  cfg.delta = s.gappy_delta;
  const gsm::GenericSurrogateModel model =
      gsm::gappy_fit_transformed(basis, samples, cfg);
  const std::string path = s.out.empty() ? gsm_path(s) : s.out;
  const std::string hash =
      gsm::io::write_gsm(path, model, dir.manifest_hash, pod_hash);
  emit(json{{"command", "fit-gsm"},
            {"file", path},
            {"n", samples.size()},
            {"residual", model.residual},
            {"linear_fallback", model.linear_fallback},
            {"hash", hash}});
  return 0;
}

int cmd_predict(const Settings& s) {
  if (s.db_dir.empty()) throw gsm::ConfigError("predict needs --db");
  const gsm::io::DatabaseDir dir = gsm::io::load_database(s.db_dir);
  const gsm::PodBasis basis = gsm::io::load_pod(pod_path(s), dir);
  const std::string pod_hash =
      gsm::io::read_artifact(pod_path(s)).at("hash").get<std::string>();
  const gsm::GenericSurrogateModel model = gsm::io::load_gsm(
      gsm_path(s), basis, dir.manifest_hash, pod_hash);
  const int d = basis.dim();

  if (s.grid > 0) {
    if (s.out.empty()) throw gsm::ConfigError("predict --grid needs --out");
    const gsm::CandidateGrid grid =
        gsm::CandidateGrid::tensor(basis.db.domain, s.grid);
    std::string csv;
    for (int k = 0; k < d; ++k) csv += "x" + std::to_string(k) + ",";
    csv += "value\n";
    for (int i = 0; i < grid.points.rows(); ++i) {
      const gsm::VectorXd x = grid.points.row(i).transpose();
      for (int k = 0; k < d; ++k)
        csv += gsm::io::format_double(x[k]) + ",";
      csv += gsm::io::format_double(model.value(x)) + "\n";
    }
    write_text(s.out, csv);
    emit(json{{"command", "predict"},
              {"file", s.out},
              {"points", grid.points.rows()}});
    return 0;
  }

  if (s.at.empty())
    throw gsm::ConfigError("predict needs --at or --grid");
  json values = json::array();
  for (const std::string& point : s.at) {
    std::stringstream split(point);
    std::string field;
    std::vector<double> coords;
    while (std::getline(split, field, ','))
      coords.push_back(std::stod(field));
    if (static_cast<int>(coords.size()) != d)
      throw gsm::ConfigError("--at expects " + std::to_string(d) +
                             " comma-separated coordinates");
    gsm::VectorXd x(d);
    for (int k = 0; k < d; ++k) x[k] = coords[k];
    values.push_back(model.value(x));
  }
  emit(json{{"command", "predict"}, {"values", values}});
  return 0;
}

int cmd_experiment(const Settings& s) {
  if (s.db_dir.empty()) throw gsm::ConfigError("experiment needs --db");
  if (s.out.empty()) throw gsm::ConfigError("experiment needs --out");
  const gsm::io::DatabaseDir dir = gsm::io::load_database(s.db_dir);

  gsm::ExperimentConfig cfg;
  cfg.methods.clear();
  for (const std::string& name : s.methods) {
    const auto method = gsm::parse_method(name);
    if (!method) throw gsm::ConfigError("unknown method \"" + name + "\"");
    cfg.methods.push_back(*method);
  }
  cfg.sizes = s.sizes;
  cfg.repeats = s.repeats;
  cfg.seed_base = s.seed_base;
  cfg.pod_threshold = s.threshold;
  cfg.align_delta = s.align_delta;
  cfg.gappy.delta = s.gappy_delta;
  cfg.validation_per_axis = s.validation;
  cfg.quad_per_axis = s.quad_per_axis;

  const gsm::SurfacePtr target = gsm::held_out_member(s.target_seed);
  const Stopwatch watch;
  const gsm::ExperimentReport report =
      gsm::run_experiment(dir.synthetic, *target, cfg);
  const double wall = watch.seconds();

  fs::create_directories(s.out);
  const std::string csv_path = s.out + "/report.csv";
  write_text(csv_path, gsm::experiment_csv(report));

  json aggregates = json::array();
  for (const gsm::ExperimentAggregate& agg : report.aggregates)
    aggregates.push_back(json{{"method", gsm::method_name(agg.method)},
                              {"size", agg.size},
                              {"count", agg.count},
                              {"mean_eta1", agg.mean_eta1},
                              {"mean_etainf", agg.mean_etainf}});
  const std::string report_path = s.out + "/report.json";
  gsm::io::write_artifact(
      report_path,
      json{{"format", "gsm-report/1"},
           {"db_hash", dir.manifest_hash},
           {"target_seed", s.target_seed},
           {"seed_base", s.seed_base},
           {"sizes", s.sizes},
           {"repeats", s.repeats},
           {"pre_align_ssd", report.pre_align_ssd},
           {"post_align_ssd", report.post_align_ssd},
           {"rank_aligned", report.rank_aligned},
           {"rank_unaligned", report.rank_unaligned},
           {"aggregates", std::move(aggregates)}});
  write_runtime(s.out + "/runtime.json", wall);

  emit(json{{"command", "experiment"},
            {"rows", report.rows.size()},
            {"csv", csv_path},
            {"report", report_path},
            {"wall_seconds", wall}});
  return 0;
}

int cmd_adaptive(const Settings& s) {
  if (s.db_dir.empty()) throw gsm::ConfigError("adaptive needs --db");
  if (s.out.empty()) throw gsm::ConfigError("adaptive needs --out");
  const gsm::io::DatabaseDir dir = gsm::io::load_database(s.db_dir);
  const gsm::AlignedDatabase db = dir.database();

  gsm::AdaptiveConfig cfg;
  if (s.strategy == "mse") {
    cfg.strategy = gsm::AdaptiveStrategy::kMse;
  } else if (s.strategy == "discrepancy") {
    cfg.strategy = gsm::AdaptiveStrategy::kDiscrepancy;
  } else {
    throw gsm::ConfigError("unknown strategy \"" + s.strategy + "\"");
  }
  cfg.budget = s.budget;
  cfg.grid_per_axis = s.grid_per_axis;
  cfg.gappy.delta = s.gappy_delta;

  std::optional<gsm::PodBasis> basis;
  if (!s.kriging_only) {
    const gsm::QuadratureRule quad = quadrature(db.domain, s.quad_per_axis);
    gsm::PodConfig pod_cfg;
    pod_cfg.threshold = s.threshold;
    basis = gsm::compute_pod(db, gsm::covariance_matrix(db, quad), pod_cfg);
  }

  const gsm::SurfacePtr target = gsm::held_out_member(s.target_seed);
  const gsm::ValidationGrid validation =
      gsm::ValidationGrid::build(*target, db.domain, s.validation);

  gsm::SampleSet initial;
  initial.points = gsm::latin_hypercube(s.initial, db.domain, s.seed);
  initial.values.resize(s.initial);
  for (int i = 0; i < s.initial; ++i)
    initial.values[i] = target->value(initial.points.row(i).transpose());

  const Stopwatch watch;
  const gsm::AdaptiveResult result = gsm::run_adaptive(
      *target, db.domain, initial, basis ? &*basis : nullptr, cfg,
      validation);
  const double wall = watch.seconds();

  fs::create_directories(s.out);
  const std::string trace_path = s.out + "/trace.csv";
  write_text(trace_path, gsm::adaptive_trace_csv(result, cfg.strategy));
  write_runtime(s.out + "/runtime.json", wall);

  int hk_failures = 0;
  for (const gsm::AdaptiveRecord& rec : result.trace)
    hk_failures += rec.hk_failed ? 1 : 0;
  const gsm::AdaptiveRecord& last = result.trace.back();
  emit(json{{"command", "adaptive"},
            {"trace", trace_path},
            {"n", last.n},
            {"final_eta1", last.eta1},
            {"final_etainf", last.etainf},
            {"hk_failures", hk_failures},
            {"wall_seconds", wall}});
  return 0;
}

int run(int argc, char** argv) {
  Settings s;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      apply_config(argv[i + 1], s);
    } else if (arg.rfind("--config=", 0) == 0) {
      apply_config(arg.substr(9), s);
    }
  }

  CLI::App app{"Surrogate-modeling pipeline"};
  app.require_subcommand(1);
  app.add_option("--config", s.config_path,
                 "JSON config file; flags override its values");
  app.add_option("--threads", s.threads, "OpenMP thread count");

  const auto add_db = [&](CLI::App* cmd) {
    cmd->add_option("--db", s.db_dir, "database directory");
  };
  const auto add_quad = [&](CLI::App* cmd) {
    cmd->add_option("--quad", s.quad_per_axis,
                    "quadrature points per axis");
  };
  const auto add_pod_path = [&](CLI::App* cmd) {
    cmd->add_option("--pod", s.pod_path, "basis artifact path");
  };

  CLI::App* gen = app.add_subcommand("gen-db", "generate a synthetic database");
  gen->add_option("--out", s.out, "output directory")->required();
  gen->add_option("--members", s.members, "database size");
  gen->add_option("--seed", s.seed, "generation seed");
  gen->add_flag("--distort,!--no-distort", s.distort,
                "wrap members in random distortions");

  CLI::App* align = app.add_subcommand("align", "align the database members");
  add_db(align);
  add_quad(align);
  align->add_option("--delta", s.align_delta, "penalty weight");

  CLI::App* pod = app.add_subcommand("pod", "compute the reduced basis");
  add_db(pod);
  add_quad(pod);
  add_pod_path(pod);
  pod->add_option("--threshold", s.threshold, "retained energy fraction");
  pod->add_flag("--mean-center", s.mean_center, "subtract the ensemble mean");

  CLI::App* fit = app.add_subcommand("fit-gsm", "fit the generic surrogate");
  add_db(fit);
  add_pod_path(fit);
  fit->add_option("--samples", s.samples_path, "sample CSV (x..., value)");
  fit->add_option("--out", s.out, "model artifact path");
  fit->add_option("--delta", s.gappy_delta, "ridge weight");

  CLI::App* predict = app.add_subcommand("predict", "evaluate a fitted model");
  add_db(predict);
  add_pod_path(predict);
  predict->add_option("--model", s.gsm_path, "model artifact path");
  predict->add_option("--at", s.at, "point as comma-separated coordinates");
  predict->add_option("--grid", s.grid, "dump an n-per-axis grid CSV");
  predict->add_option("--out", s.out, "grid CSV path");

  CLI::App* experiment =
      app.add_subcommand("experiment", "sampling-plan comparison sweep");
  add_db(experiment);
  add_quad(experiment);
  experiment->add_option("--out", s.out, "output directory");
  experiment->add_option("--sizes", s.sizes, "sample sizes")->delimiter(',');
  experiment->add_option("--repeats", s.repeats, "designs per size");
  experiment->add_option("--seed-base", s.seed_base, "design seed base");
  experiment->add_option("--target-seed", s.target_seed,
                         "held-out member seed");
  experiment->add_option("--methods", s.methods, "methods to compare")
      ->delimiter(',');
  experiment->add_option("--threshold", s.threshold,
                         "basis energy threshold");
  experiment->add_option("--validation", s.validation,
                         "validation grid per axis");
  experiment->add_option("--gappy-delta", s.gappy_delta,
                         "surrogate ridge weight");
  experiment->add_option("--align-delta", s.align_delta,
                         "alignment penalty weight");

  CLI::App* adaptive = app.add_subcommand("adaptive", "adaptive sampling run");
  add_db(adaptive);
  add_quad(adaptive);
  adaptive->add_option("--out", s.out, "output directory");
  adaptive->add_option("--strategy", s.strategy, "mse or discrepancy");
  adaptive->add_option("--budget", s.budget, "total sample budget");
  adaptive->add_option("--initial", s.initial, "initial design size");
  adaptive->add_option("--seed", s.seed, "initial design seed");
  adaptive->add_option("--target-seed", s.target_seed,
                       "held-out member seed");
  adaptive->add_option("--grid-per-axis", s.grid_per_axis,
                       "candidate grid per axis");
  adaptive->add_option("--threshold", s.threshold, "basis energy threshold");
  adaptive->add_option("--validation", s.validation,
                       "validation grid per axis");
  adaptive->add_option("--gappy-delta", s.gappy_delta,
                       "surrogate ridge weight");
  adaptive->add_flag("--kriging-only", s.kriging_only,
                     "skip the surrogate trend");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw gsm::ConfigError(e.what());
  }

#ifdef _OPENMP
  if (s.threads > 0) omp_set_num_threads(s.threads);
#endif

  if (gen->parsed()) return cmd_gen_db(s);
  if (align->parsed()) return cmd_align(s);
  if (pod->parsed()) return cmd_pod(s);
  if (fit->parsed()) return cmd_fit_gsm(s);
  if (predict->parsed()) return cmd_predict(s);
  if (experiment->parsed()) return cmd_experiment(s);
  if (adaptive->parsed()) return cmd_adaptive(s);
  throw gsm::ConfigError("no command given");
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gsm::Error& e) {
    std::cerr << json{{"error", {{"code", e.code()}, {"message", e.what()}}}}
                     .dump()
              << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error",
                       {{"code", "InvalidArgument"}, {"message", e.what()}}}}
                     .dump()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error",
                       {{"code", "Internal"}, {"message", e.what()}}}}
                     .dump()
              << '\n';
    return 1;
  }
}
