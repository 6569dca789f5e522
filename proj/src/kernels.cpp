#include "gsm/kernels.hpp"

#include <cstdint>
#include <stdexcept>

#include "gsm/parallel.hpp"

namespace gsm {
namespace {

void check_table_args(const std::vector<SurfacePtr>& entries,
                      const std::vector<TransformQ>& transforms) {
  if (entries.size() != transforms.size())
    throw std::invalid_argument("eval_table: entries/transforms size mismatch");
  if (entries.empty())
    throw std::invalid_argument("eval_table: empty database");
}

}  // namespace

namespace kernels {

MatrixXd map_points(const MatrixXd& points, const TransformQ& q) {
  const std::int64_t n = points.rows();
  const int d = static_cast<int>(points.cols());
  if (q.dim() != d)
    throw std::invalid_argument("map_points: transform dimension mismatch");
  MatrixXd out(n, d);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k)
      out(i, k) = points(i, k) * (1.0 + q.axis_scale[k]) + q.axis_shift[k];
  return out;
}

MatrixXd eval_table(const std::vector<SurfacePtr>& entries,
                    const std::vector<TransformQ>& transforms,
                    const MatrixXd& nodes) {
  check_table_args(entries, transforms);
  const std::int64_t n = nodes.rows();
  const int m = static_cast<int>(entries.size());
  MatrixXd table(n, m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    const VectorXd x = nodes.row(i).transpose();
    for (int j = 0; j < m; ++j) {
      const VectorXd xm = transform_point(x, transforms[j]);
      table(i, j) = transform_value(entries[j]->value(xm), transforms[j]);
    }
  }
  return table;
}

MatrixXd eval_table(const std::vector<SurfacePtr>& entries,
                    const MatrixXd& nodes) {
  std::vector<TransformQ> ids(entries.size(),
                              TransformQ::identity(static_cast<int>(nodes.cols())));
  return eval_table(entries, ids, nodes);
}

MatrixXd weighted_gram(const MatrixXd& table, const VectorXd& weights) {
  if (table.rows() != weights.size())
    throw std::invalid_argument("weighted_gram: weight count mismatch");
  const int m = static_cast<int>(table.cols());
  MatrixXd gram = MatrixXd::Zero(m, m);
  chunked_reduce(
      table.rows(), MatrixXd(MatrixXd::Zero(m, m)),
      [&](std::int64_t k, MatrixXd& partial) {
        partial.noalias() +=
            weights[k] * (table.row(k).transpose() * table.row(k));
      },
      [&](const MatrixXd& partial) { gram += partial; });
  return gram;
}

}  // namespace kernels

namespace reference {

MatrixXd map_points(const MatrixXd& points, const TransformQ& q) {
  MatrixXd out(points.rows(), points.cols());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    out.row(i) = transform_point(points.row(i).transpose(), q).transpose();
  return out;
}

MatrixXd eval_table(const std::vector<SurfacePtr>& entries,
                    const std::vector<TransformQ>& transforms,
                    const MatrixXd& nodes) {
  check_table_args(entries, transforms);
  MatrixXd table(nodes.rows(), static_cast<Eigen::Index>(entries.size()));
  for (Eigen::Index i = 0; i < nodes.rows(); ++i)
    for (std::size_t j = 0; j < entries.size(); ++j) {
      const VectorXd xm =
          transform_point(nodes.row(i).transpose(), transforms[j]);
      table(i, static_cast<Eigen::Index>(j)) =
          transform_value(entries[j]->value(xm), transforms[j]);
    }
  return table;
}

MatrixXd weighted_gram(const MatrixXd& table, const VectorXd& weights) {
  const Eigen::Index m = table.cols();
  MatrixXd gram = MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < table.rows(); ++k)
        acc += weights[k] * table(k, a) * table(k, b);
      gram(a, b) = acc;
    }
  return gram;
}

}  // namespace reference
}  // namespace gsm
