#pragma once

#include <vector>

#include "gsm/domain.hpp"
#include "gsm/gauss_newton.hpp"
#include "gsm/quadrature.hpp"
#include "gsm/transform.hpp"

namespace gsm {

// Fraction by which the evaluation-validity region extends past the domain
// on each side. Entries must stay evaluable there (plus the finite
// difference step used for entry derivatives).
inline constexpr double kDomainExtension = 0.15;

// A database of response surfaces with one admissible transformation per
// entry establishing the correspondence between them. Entry 0 is the
// reference and keeps the identity transformation.
struct AlignedDatabase {
  std::vector<SurfacePtr> entries;
  std::vector<TransformQ> transforms;
  Domain domain;
  Domain extended_domain;

  int size() const { return static_cast<int>(entries.size()); }
  int dim() const { return domain.dim(); }

  // m >= 2, transforms[0] identity, matching dimensions.
  void validate() const;

  // Throws DomainEscape unless every transformed preimage of every row of
  // points stays inside the extended domain.
  void check_preimages(const MatrixXd& points) const;

  // Aligned evaluation of entry j: value map applied to the entry at the
  // transformed preimage of x. No domain check; callers gate with
  // check_preimages.
  double aligned_value(int j, const VectorXd& x) const;
};

// Penalty weight default: 1e-3 times the mean squared value range of the
// entries over the quadrature nodes.
double default_alignment_delta(const std::vector<SurfacePtr>& entries,
                               const QuadratureRule& quad);

// Discretized alignment objective:
//   (1/(m(m-1))) sum_{j<k} sum_i w_i (ybar_j(x_i) - ybar_k(x_i))^2
//   + (delta/2) sum_{j>=2} |q^j|^2.
// Throws DomainEscape when a transformed preimage of a quadrature node
// leaves the extended domain.
double ssd_objective(const AlignedDatabase& db, const QuadratureRule& quad,
                     double delta);

// Normal equations of the residual form of ssd_objective with respect to the
// free transformations (entries 1..m-1, packed contiguously). The production
// version accumulates J^T J and J^T r over fixed-size node chunks without
// ever materializing J; the reference version builds J explicitly and is
// kept as a test oracle for small instances.
NormalEquations alignment_normal_equations(const AlignedDatabase& db,
                                           const QuadratureRule& quad,
                                           double delta);

namespace reference {
NormalEquations alignment_normal_equations(const AlignedDatabase& db,
                                           const QuadratureRule& quad,
                                           double delta);
}

// Damped Gauss-Newton minimization of ssd_objective starting from the
// identity. Entry 0 stays fixed as the reference frame. The returned
// objective never exceeds the objective at the identity.
AlignedDatabase align_database(const std::vector<SurfacePtr>& entries,
                               const Domain& domain,
                               const QuadratureRule& quad, double delta,
                               const LmOptions& gn = {});

}  // namespace gsm
