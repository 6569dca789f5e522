#include "gsm/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "gsm/kernels.hpp"
#include "gsm/parallel.hpp"

namespace gsm {
namespace {

constexpr double kFdStepFraction = 1e-5;

int free_params(int m, int d) { return (m - 1) * (2 * d + 2); }

VectorXd pack_free(const std::vector<TransformQ>& transforms) {
  const int m = static_cast<int>(transforms.size());
  const int b = transforms[0].packed_size();
  VectorXd z(free_params(m, transforms[0].dim()));
  for (int t = 1; t < m; ++t) z.segment((t - 1) * b, b) = transforms[t].pack();
  return z;
}

std::vector<TransformQ> unpack_free(const VectorXd& z, int m, int d) {
  std::vector<TransformQ> transforms(m, TransformQ::identity(d));
  const int b = 2 * d + 2;
  for (int t = 1; t < m; ++t)
    transforms[t] = TransformQ::unpack(z.segment((t - 1) * b, b), d);
  return transforms;
}

void check_preimages(const AlignedDatabase& db, const MatrixXd& nodes) {
  db.check_preimages(nodes);
}

// Raw entry values and entry gradients (central differences in the mapped
// frame) at the transformed preimages of the quadrature nodes. The gradient
// probes evaluate the raw entries without a domain check, so entries must
// tolerate the differencing step past the extended domain.
struct EntryTables {
  MatrixXd raw;                // n x m
  std::vector<MatrixXd> grad;  // per axis: n x m
};

EntryTables build_tables(const AlignedDatabase& db, const MatrixXd& nodes,
                         bool with_gradients) {
  const int n = static_cast<int>(nodes.rows());
  const int m = db.size();
  const int d = db.dim();
  check_preimages(db, nodes);

  VectorXd step(d);
  for (int k = 0; k < d; ++k) step[k] = kFdStepFraction * db.domain.edge(k);

  EntryTables tables;
  tables.raw.resize(n, m);
  if (with_gradients)
    tables.grad.assign(d, MatrixXd(n, m));
  for (int j = 0; j < m; ++j) {
    const MatrixXd mapped = kernels::map_points(nodes, db.transforms[j]);
    const ResponseSurface& entry = *db.entries[j];
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n; ++i) {
      const VectorXd x = mapped.row(i).transpose();
      tables.raw(i, j) = entry.value(x);
      if (with_gradients) {
        for (int k = 0; k < d; ++k) {
          VectorXd lo = x, hi = x;
          lo[k] -= step[k];
          hi[k] += step[k];
          tables.grad[k](i, j) =
              (entry.value(hi) - entry.value(lo)) / (2.0 * step[k]);
        }
      }
    }
  }
  return tables;
}

MatrixXd aligned_from_raw(const AlignedDatabase& db, const MatrixXd& raw) {
  MatrixXd aligned = raw;
  for (int j = 0; j < db.size(); ++j) {
    aligned.col(j) *= 1.0 + db.transforms[j].value_scale;
    aligned.col(j).array() += db.transforms[j].value_shift;
  }
  return aligned;
}

double penalty_terms(const AlignedDatabase& db, double delta,
                     NormalEquations* ne) {
  const int b = 2 * db.dim() + 2;
  double obj = 0.0;
  for (int t = 1; t < db.size(); ++t) {
    const VectorXd q = db.transforms[t].pack();
    obj += 0.5 * delta * q.squaredNorm();
    if (ne) {
      const int off = (t - 1) * b;
      ne->jtj.diagonal().segment(off, b).array() += 0.5 * delta;
      ne->jtr.segment(off, b) += 0.5 * delta * q;
    }
  }
  return obj;
}

// Derivative of the aligned value of entry t at node i with respect to the
// entry's own packed transform parameters.
void entry_jacobian(const AlignedDatabase& db, const EntryTables& tables,
                    const MatrixXd& nodes, int t, int i, VectorXd& out) {
  const int d = db.dim();
  const double vscale = 1.0 + db.transforms[t].value_scale;
  for (int k = 0; k < d; ++k) {
    const double dydx = tables.grad[k](i, t);
    out[2 * k] = vscale * dydx * nodes(i, k);
    out[2 * k + 1] = vscale * dydx;
  }
  out[2 * d] = tables.raw(i, t);
  out[2 * d + 1] = 1.0;
}

}  // namespace

void AlignedDatabase::validate() const {
  if (entries.size() < 2)
    throw std::invalid_argument("AlignedDatabase: need at least two entries");
  if (entries.size() != transforms.size())
    throw std::invalid_argument(
        "AlignedDatabase: entries/transforms size mismatch");
  for (const auto& e : entries)
    if (!e) throw std::invalid_argument("AlignedDatabase: null entry");
  if (!transforms[0].is_identity())
    throw std::invalid_argument(
        "AlignedDatabase: reference transform must be the identity");
  for (const auto& q : transforms)
    if (q.dim() != domain.dim())
      throw std::invalid_argument("AlignedDatabase: transform dimension");
  if (extended_domain.dim() != domain.dim())
    throw std::invalid_argument("AlignedDatabase: extended domain dimension");
  for (int k = 0; k < domain.dim(); ++k)
    if (extended_domain.lower[k] > domain.lower[k] ||
        extended_domain.upper[k] < domain.upper[k])
      throw std::invalid_argument(
          "AlignedDatabase: extended domain must contain the domain");
}

void AlignedDatabase::check_preimages(const MatrixXd& points) const {
  for (int j = 0; j < size(); ++j) {
    const MatrixXd mapped = kernels::map_points(points, transforms[j]);
    for (Eigen::Index i = 0; i < mapped.rows(); ++i)
      if (!extended_domain.contains(mapped.row(i).transpose()))
        throw DomainEscape("transformed preimage of point " +
                           std::to_string(i) + " for entry " +
                           std::to_string(j) +
                           " leaves the extended domain");
  }
}

double AlignedDatabase::aligned_value(int j, const VectorXd& x) const {
  const VectorXd mapped = transform_point(x, transforms[j]);
  return transform_value(entries[j]->value(mapped), transforms[j]);
}

double default_alignment_delta(const std::vector<SurfacePtr>& entries,
                               const QuadratureRule& quad) {
  if (entries.empty())
    throw std::invalid_argument("default_alignment_delta: empty database");
  const MatrixXd table = kernels::eval_table(entries, quad.nodes);
  double mean_sq_range = 0.0;
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    const double range = table.col(j).maxCoeff() - table.col(j).minCoeff();
    mean_sq_range += range * range;
  }
  mean_sq_range /= static_cast<double>(table.cols());
  return 1e-3 * mean_sq_range;
}

double ssd_objective(const AlignedDatabase& db, const QuadratureRule& quad,
                     double delta) {
  db.validate();
  if (delta < 0.0 || !std::isfinite(delta))
    throw std::invalid_argument("ssd_objective: delta must be >= 0");
  const EntryTables tables = build_tables(db, quad.nodes, false);
  const MatrixXd aligned = aligned_from_raw(db, tables.raw);
  const int m = db.size();
  const double prefactor = 1.0 / (static_cast<double>(m) * (m - 1));
  double obj = 0.0;
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k) {
      double acc = 0.0;
      for (int i = 0; i < quad.size(); ++i) {
        const double diff = aligned(i, j) - aligned(i, k);
        acc += quad.weights[i] * diff * diff;
      }
      obj += prefactor * acc;
    }
  return obj + penalty_terms(db, delta, nullptr);
}

NormalEquations alignment_normal_equations(const AlignedDatabase& db,
                                           const QuadratureRule& quad,
                                           double delta) {
  db.validate();
  const int m = db.size();
  const int d = db.dim();
  const int b = 2 * d + 2;
  const int p = free_params(m, d);
  const EntryTables tables = build_tables(db, quad.nodes, true);
  const MatrixXd aligned = aligned_from_raw(db, tables.raw);
  const double prefactor = 1.0 / (static_cast<double>(m) * (m - 1));

  NormalEquations ne;
  ne.jtj = MatrixXd::Zero(p, p);
  ne.jtr = VectorXd::Zero(p);
  ne.objective = 0.0;

  struct PairPartial {
    MatrixXd jtj;
    VectorXd jtr;
    double objective;
  };
  const PairPartial zero{MatrixXd::Zero(2 * b, 2 * b), VectorXd::Zero(2 * b),
                         0.0};

  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      PairPartial total = zero;
      chunked_reduce(
          quad.size(), zero,
          [&](std::int64_t i, PairPartial& part) {
            const int node = static_cast<int>(i);
            VectorXd u = VectorXd::Zero(2 * b);
            if (j > 0) {
              VectorXd dj(b);
              entry_jacobian(db, tables, quad.nodes, j, node, dj);
              u.head(b) = dj;
            }
            VectorXd dk(b);
            entry_jacobian(db, tables, quad.nodes, k, node, dk);
            u.tail(b) = -dk;
            const double s = std::sqrt(quad.weights[node] * prefactor);
            u *= s;
            const double r = s * (aligned(node, j) - aligned(node, k));
            part.jtj.noalias() += u * u.transpose();
            part.jtr.noalias() += u * r;
            part.objective += r * r;
          },
          [&](const PairPartial& part) {
            total.jtj += part.jtj;
            total.jtr += part.jtr;
            total.objective += part.objective;
          });

      const int offj = (j - 1) * b;
      const int offk = (k - 1) * b;
      if (j > 0) {
        ne.jtj.block(offj, offj, b, b) += total.jtj.topLeftCorner(b, b);
        ne.jtj.block(offj, offk, b, b) += total.jtj.topRightCorner(b, b);
        ne.jtj.block(offk, offj, b, b) += total.jtj.bottomLeftCorner(b, b);
        ne.jtr.segment(offj, b) += total.jtr.head(b);
      }
      ne.jtj.block(offk, offk, b, b) += total.jtj.bottomRightCorner(b, b);
      ne.jtr.segment(offk, b) += total.jtr.tail(b);
      ne.objective += total.objective;
    }
  }
  ne.objective += penalty_terms(db, delta, &ne);
  return ne;
}

namespace reference {

NormalEquations alignment_normal_equations(const AlignedDatabase& db,
                                           const QuadratureRule& quad,
                                           double delta) {
  db.validate();
  const int m = db.size();
  const int d = db.dim();
  const int b = 2 * d + 2;
  const int p = free_params(m, d);
  const int n = quad.size();
  const EntryTables tables = build_tables(db, quad.nodes, true);
  const MatrixXd aligned = aligned_from_raw(db, tables.raw);
  const double prefactor = 1.0 / (static_cast<double>(m) * (m - 1));

  const int pair_rows = n * (m * (m - 1) / 2);
  MatrixXd jac = MatrixXd::Zero(pair_rows + p, p);
  VectorXd res = VectorXd::Zero(pair_rows + p);
  int row = 0;
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k)
      for (int i = 0; i < n; ++i, ++row) {
        const double s = std::sqrt(quad.weights[i] * prefactor);
        res[row] = s * (aligned(i, j) - aligned(i, k));
        VectorXd dblock(b);
        if (j > 0) {
          entry_jacobian(db, tables, quad.nodes, j, i, dblock);
          jac.row(row).segment((j - 1) * b, b) = s * dblock.transpose();
        }
        entry_jacobian(db, tables, quad.nodes, k, i, dblock);
        jac.row(row).segment((k - 1) * b, b) = -s * dblock.transpose();
      }
  for (int t = 1; t < m; ++t) {
    const VectorXd q = db.transforms[t].pack();
    for (int c = 0; c < b; ++c, ++row) {
      jac(row, (t - 1) * b + c) = std::sqrt(0.5 * delta);
      res[row] = std::sqrt(0.5 * delta) * q[c];
    }
  }

  NormalEquations ne;
  ne.jtj = jac.transpose() * jac;
  ne.jtr = jac.transpose() * res;
  ne.objective = res.squaredNorm();
  return ne;
}

}  // namespace reference

AlignedDatabase align_database(const std::vector<SurfacePtr>& entries,
                               const Domain& domain,
                               const QuadratureRule& quad, double delta,
                               const LmOptions& gn) {
  if (entries.size() < 2)
    throw std::invalid_argument("align_database: need at least two entries");
  if (quad.dim() != domain.dim())
    throw std::invalid_argument("align_database: quadrature dimension");
  const int m = static_cast<int>(entries.size());
  const int d = domain.dim();

  AlignedDatabase db;
  db.entries = entries;
  db.transforms.assign(m, TransformQ::identity(d));
  db.domain = domain;
  db.extended_domain = domain.inflated(kDomainExtension);

  const auto assemble = [&](const VectorXd& z) {
    AlignedDatabase cand = db;
    cand.transforms = unpack_free(z, m, d);
    return alignment_normal_equations(cand, quad, delta);
  };
  const auto objective = [&](const VectorXd& z) {
    AlignedDatabase cand = db;
    cand.transforms = unpack_free(z, m, d);
    try {
      return ssd_objective(cand, quad, delta);
    } catch (const DomainEscape&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const LmOutcome fit = levenberg_marquardt(
      assemble, objective, VectorXd::Zero(free_params(m, d)), gn);
  db.transforms = unpack_free(fit.z, m, d);
  db.validate();
  return db;
}

}  // namespace gsm
