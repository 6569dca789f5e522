#include "gsm/gappy.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gsm/errors.hpp"
#include "gsm/kernels.hpp"
#include "gsm/parallel.hpp"

namespace gsm {
namespace {

constexpr double kFdStepFraction = 1e-5;

void reject_centered(const PodBasis& basis, const char* where) {
  if (basis.mean_centered)
    throw std::invalid_argument(std::string(where) +
                                ": mean-centered basis unsupported");
}

// Everything the transformed residuals need at one parameter vector. The
// q-mapped sample points are constant over the fit; the p-mapped evaluation
// points and the entry values/gradients there change with p.
struct GappyTables {
  MatrixXd raw;               // n x m, transformed entry values at x_bar
  std::vector<MatrixXd> grad; // per axis: n x m, entry spatial derivative
};

// u_cache(i, j*d + k) = component k of q_j-mapped sample i.
MatrixXd map_samples(const AlignedDatabase& db, const MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  const int m = db.size();
  const int d = db.dim();
  MatrixXd u(n, m * d);
  for (int j = 0; j < m; ++j)
    u.block(0, j * d, n, d) = kernels::map_points(points, db.transforms[j]);
  return u;
}

GappyTables build_tables(const AlignedDatabase& db, const MatrixXd& u_cache,
                         const TransformP& p, bool with_gradients) {
  const int n = static_cast<int>(u_cache.rows());
  const int m = db.size();
  const int d = db.dim();

  VectorXd step(d);
  for (int k = 0; k < d; ++k) step[k] = kFdStepFraction * db.domain.edge(k);

  GappyTables tables;
  tables.raw.resize(n, m);
  if (with_gradients) tables.grad.assign(d, MatrixXd(n, m));

  // Escapes are recorded, not thrown: an exception may not leave the
  // parallel region. The lowest offending (sample, entry) index wins so the
  // message is deterministic.
  std::atomic<long long> escape{-1};

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < n; ++i) {
    VectorXd probe(d);
    for (int j = 0; j < m; ++j) {
      if (escape.load(std::memory_order_relaxed) >= 0) break;
      const TransformQ& q = db.transforms[j];
      const VectorXd x_bar =
          transform_point(u_cache.row(i).segment(j * d, d).transpose(), p);
      if (!db.extended_domain.contains(x_bar)) {
        long long flat = static_cast<long long>(i) * m + j;
        long long seen = escape.load(std::memory_order_relaxed);
        while ((seen < 0 || flat < seen) &&
               !escape.compare_exchange_weak(seen, flat,
                                             std::memory_order_relaxed)) {
        }
        break;
      }
      const double scale = 1.0 + q.value_scale;
      tables.raw(i, j) = scale * db.entries[j]->value(x_bar) + q.value_shift;
      if (!with_gradients) continue;
      for (int k = 0; k < d; ++k) {
        probe = x_bar;
        probe[k] = x_bar[k] + step[k];
        const double up = db.entries[j]->value(probe);
        probe[k] = x_bar[k] - step[k];
        const double down = db.entries[j]->value(probe);
        tables.grad[k](i, j) = scale * (up - down) / (2.0 * step[k]);
      }
    }
  }
  const long long flat = escape.load(std::memory_order_relaxed);
  if (flat >= 0)
    throw DomainEscape("transformed preimage of sample " +
                       std::to_string(flat / m) + " for entry " +
                       std::to_string(flat % m) +
                       " leaves the extended domain");
  return tables;
}

struct SamplePartial {
  MatrixXd jtj;
  VectorXd jtr;
  double obj = 0.0;
};

// The composed affine maps send the domain box to a box, so the whole
// reference domain stays evaluable iff every mapped corner does. Fits reject
// transforms failing this, which keeps the fitted surrogate evaluable at
// arbitrary domain points (it serves as a trend elsewhere).
bool transform_feasible(const AlignedDatabase& db, const TransformP& p) {
  const int d = db.dim();
  VectorXd corner(d);
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    for (int k = 0; k < d; ++k)
      corner[k] = ((mask >> k) & 1) != 0 ? db.domain.upper[k]
                                         : db.domain.lower[k];
    for (int j = 0; j < db.size(); ++j) {
      const VectorXd mapped =
          transform_point(transform_point(corner, db.transforms[j]), p);
      if (!db.extended_domain.contains(mapped)) return false;
    }
  }
  return true;
}

}  // namespace

double GenericSurrogateModel::value(const VectorXd& x) const {
  const AlignedDatabase& db = basis.db;
  if (x.size() != db.dim())
    throw std::invalid_argument("GenericSurrogateModel: dimension mismatch");
  double out = p.value_shift;
  for (int j = 0; j < db.size(); ++j) {
    const TransformQ& q = db.transforms[j];
    const VectorXd x_bar = transform_point(transform_point(x, q), p);
    if (!db.extended_domain.contains(x_bar))
      throw DomainEscape(
          "prediction preimage for entry " + std::to_string(j) +
          " leaves the extended domain");
    out += a_y[j] * ((1.0 + q.value_scale) * db.entries[j]->value(x_bar) +
                     q.value_shift);
  }
  return out;
}

VectorXd gappy_fit_linear(const PodBasis& basis, const SampleSet& samples) {
  reject_centered(basis, "gappy_fit_linear");
  const AlignedDatabase& db = basis.db;
  samples.validate(db.domain);
  const int n = static_cast<int>(samples.points.rows());
  if (samples.points.cols() != db.dim())
    throw std::invalid_argument("gappy_fit_linear: dimension mismatch");
  if (n < basis.rank)
    throw RankDeficient("gappy_fit_linear: " + std::to_string(n) +
                        " samples cannot determine " +
                        std::to_string(basis.rank) + " coefficients");

  db.check_preimages(samples.points);
  const MatrixXd table =
      kernels::eval_table(db.entries, db.transforms, samples.points);
  const MatrixXd psi = table * basis.pullback();

  Eigen::ColPivHouseholderQR<MatrixXd> qr(psi);
  qr.setThreshold(1e-10);
  if (qr.rank() < basis.rank)
    throw RankDeficient("gappy_fit_linear: sample matrix rank " +
                        std::to_string(qr.rank()) + " below basis rank " +
                        std::to_string(basis.rank));
  return qr.solve(samples.values);
}

NormalEquations gappy_normal_equations(const PodBasis& basis,
                                       const SampleSet& samples,
                                       const VectorXd& a_psi,
                                       const TransformP& p, double delta) {
  reject_centered(basis, "gappy_normal_equations");
  const AlignedDatabase& db = basis.db;
  const int n = static_cast<int>(samples.points.rows());
  const int m = db.size();
  const int d = db.dim();
  const int l = basis.rank;
  const int np = 2 * d + 1;
  const int nz = l + np;
  if (a_psi.size() != l)
    throw std::invalid_argument("gappy_normal_equations: coefficient size");
  if (p.dim() != d)
    throw std::invalid_argument("gappy_normal_equations: transform dimension");
  if (delta < 0.0)
    throw std::invalid_argument("gappy_normal_equations: negative ridge");

  const MatrixXd u_cache = map_samples(db, samples.points);
  const GappyTables tables = build_tables(db, u_cache, p, true);
  const MatrixXd pull = basis.pullback();
  const VectorXd a_y = pull * a_psi;

  NormalEquations out;
  out.jtj = MatrixXd::Zero(nz, nz);
  out.jtr = VectorXd::Zero(nz);
  out.objective = 0.0;

  const SamplePartial zero{MatrixXd::Zero(nz, nz), VectorXd::Zero(nz), 0.0};
  chunked_reduce(
      n, zero,
      [&](std::int64_t i, SamplePartial& acc) {
        const VectorXd psi_row = pull.transpose() * tables.raw.row(i).transpose();
        VectorXd row(nz);
        row.head(l) = psi_row;
        for (int k = 0; k < d; ++k) {
          double ds = 0.0;
          double dh = 0.0;
          for (int j = 0; j < m; ++j) {
            // grad already carries the entry's value scale.
            const double g = a_y[j] * tables.grad[k](i, j);
            ds += g * u_cache(i, j * d + k);
            dh += g;
          }
          row[l + 2 * k] = ds;
          row[l + 2 * k + 1] = dh;
        }
        row[nz - 1] = 1.0;
        const double model = a_psi.dot(psi_row) + p.value_shift;
        const double e = samples.values[i] - model;
        // Residual rows are e = phi - model, so the Jacobian row is -row.
        acc.jtj.selfadjointView<Eigen::Lower>().rankUpdate(row);
        acc.jtr -= row * e;
        acc.obj += e * e;
      },
      [&](const SamplePartial& part) {
        out.jtj += part.jtj;
        out.jtr += part.jtr;
        out.objective += part.obj;
      });
  out.jtj.triangularView<Eigen::StrictlyUpper>() =
      out.jtj.transpose().triangularView<Eigen::StrictlyUpper>();

  const VectorXd packed = p.pack();
  for (int c = 0; c < np; ++c) {
    out.jtj(l + c, l + c) += delta;
    out.jtr[l + c] += delta * packed[c];
  }
  out.objective += delta * packed.squaredNorm();
  return out;
}

GenericSurrogateModel gappy_fit_transformed(const PodBasis& basis,
                                            const SampleSet& samples,
                                            const GappyConfig& cfg) {
  reject_centered(basis, "gappy_fit_transformed");
  const AlignedDatabase& db = basis.db;
  const int n = static_cast<int>(samples.points.rows());
  const int d = db.dim();
  const int l = basis.rank;
  const int np = 2 * d + 1;

  GenericSurrogateModel model;
  model.basis = basis;
  model.p = TransformP::identity(d);

  const VectorXd a0 = gappy_fit_linear(basis, samples);

  const auto finish_linear = [&]() {
    model.a_psi = a0;
    model.a_y = basis.pullback() * a0;
    model.linear_fallback = true;
    double ssr = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = samples.values[i] -
                       model.value(samples.points.row(i).transpose());
      ssr += e * e;
    }
    model.residual = ssr;
    return model;
  };

  if (n < l + cfg.min_extra) return finish_linear();
  if (!transform_feasible(db, model.p)) return finish_linear();

  double delta = cfg.delta;
  if (delta < 0.0) {
    const double mean = samples.values.mean();
    delta = 1e-2 * n *
            (samples.values.array() - mean).square().mean();
  }
  model.delta = delta;

  VectorXd z0(l + np);
  z0.head(l) = a0;
  z0.tail(np).setZero();

  const MatrixXd u_cache = map_samples(db, samples.points);
  const auto unpack = [&](const VectorXd& z) {
    return std::pair<VectorXd, TransformP>(z.head(l),
                                           TransformP::unpack(z.tail(np), d));
  };
  const auto assemble = [&](const VectorXd& z) {
    const auto [a, p] = unpack(z);
    return gappy_normal_equations(basis, samples, a, p, delta);
  };
  const auto objective = [&](const VectorXd& z) -> double {
    try {
      const auto [a, p] = unpack(z);
      if (!transform_feasible(db, p))
        return std::numeric_limits<double>::infinity();
      const GappyTables tables = build_tables(db, u_cache, p, false);
      const VectorXd a_y = basis.pullback() * a;
      double obj = delta * z.tail(np).squaredNorm();
      for (int i = 0; i < n; ++i) {
        const double e = samples.values[i] -
                         (tables.raw.row(i).dot(a_y) + p.value_shift);
        obj += e * e;
      }
      return obj;
    } catch (const DomainEscape&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const LmOutcome fit = levenberg_marquardt(assemble, objective, z0, cfg.gn);
  const auto [a, p] = unpack(fit.z);
  model.a_psi = a;
  model.a_y = basis.pullback() * a;
  model.p = p;
  model.residual = fit.objective - delta * fit.z.tail(np).squaredNorm();
  if (model.residual < 0.0) model.residual = 0.0;
  return model;
}

}  // namespace gsm
