#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gsm/alignment.hpp"
#include "gsm/gauss_newton.hpp"
#include "gsm/quadrature.hpp"

using namespace gsm;

namespace {

Eigen::Vector2d vec2(double a, double b) { return Eigen::Vector2d(a, b); }

VectorXd vec1(double a) {
  VectorXd v(1);
  v[0] = a;
  return v;
}

Domain unit_square() { return Domain(vec2(0, 0), vec2(1, 1)); }
Domain unit_interval() { return Domain(vec1(0), vec1(1)); }

SurfacePtr constant(double c) {
  return make_surface([c](const VectorXd&) { return c; });
}

AlignedDatabase identity_db(std::vector<SurfacePtr> entries,
                            const Domain& domain) {
  AlignedDatabase db;
  db.entries = std::move(entries);
  db.transforms.assign(db.entries.size(),
                       TransformQ::identity(domain.dim()));
  db.domain = domain;
  db.extended_domain = domain.inflated(kDomainExtension);
  return db;
}

// Three smooth, everywhere-defined 2-D entries with visibly different shapes.
std::vector<SurfacePtr> smooth_entries() {
  return {
      make_surface([](const VectorXd& x) {
        return std::sin(1.3 * x[0] + 0.4 * x[1]) + 0.2 * x[0] * x[0];
      }),
      make_surface([](const VectorXd& x) {
        return std::cos(0.7 * x[0]) * (1.0 + 0.3 * x[1]) - 0.1 * x[1];
      }),
      make_surface([](const VectorXd& x) {
        return 0.5 * x[0] * x[1] + std::exp(-x[0]) + 0.3 * x[1] * x[1];
      }),
  };
}

// Hand-picked non-identity state, small enough to stay within the extension.
void set_test_transforms(AlignedDatabase& db) {
  VectorXd q1(6), q2(6);
  q1 << 0.03, 0.02, -0.04, -0.01, 0.05, -0.07;
  q2 << -0.02, 0.05, 0.05, -0.03, -0.06, 0.08;
  db.transforms[1] = TransformQ::unpack(q1, 2);
  db.transforms[2] = TransformQ::unpack(q2, 2);
}

VectorXd pack_free_transforms(const AlignedDatabase& db) {
  const int b = 2 * db.dim() + 2;
  VectorXd z((db.size() - 1) * b);
  for (int t = 1; t < db.size(); ++t)
    z.segment((t - 1) * b, b) = db.transforms[t].pack();
  return z;
}

void set_free_transforms(AlignedDatabase& db, const VectorXd& z) {
  const int b = 2 * db.dim() + 2;
  for (int t = 1; t < db.size(); ++t)
    db.transforms[t] = TransformQ::unpack(z.segment((t - 1) * b, b), db.dim());
}

}  // namespace

TEST_CASE("aligned database validation and evaluation") {
  AlignedDatabase db = identity_db({constant(1.0), constant(2.0)},
                                   unit_interval());
  db.validate();

  AlignedDatabase one = db;
  one.entries.pop_back();
  one.transforms.pop_back();
  CHECK_THROWS_AS(one.validate(), std::invalid_argument);

  AlignedDatabase bad_ref = db;
  bad_ref.transforms[0].axis_shift[0] = 0.1;
  CHECK_THROWS_AS(bad_ref.validate(), std::invalid_argument);

  AlignedDatabase bad_ext = db;
  bad_ext.extended_domain = Domain(vec1(0.2), vec1(0.8));
  CHECK_THROWS_AS(bad_ext.validate(), std::invalid_argument);

  // Value map applied to the entry at the mapped preimage.
  AlignedDatabase quad_db = identity_db(
      {make_surface([](const VectorXd& x) { return x[0] * x[0]; }),
       make_surface([](const VectorXd& x) { return x[0] * x[0]; })},
      unit_interval());
  VectorXd q(4);
  q << 0.1, 0.2, -0.5, 3.0;
  quad_db.transforms[1] = TransformQ::unpack(q, 1);
  const double expected = 0.5 * (1.1 * 0.4 + 0.2) * (1.1 * 0.4 + 0.2) + 3.0;
  CHECK(quad_db.aligned_value(1, vec1(0.4)) == doctest::Approx(expected));
}

TEST_CASE("ssd objective arithmetic on constant entries") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_square(), 5);

  AlignedDatabase db = identity_db(
      {constant(0.0), constant(1.0), constant(3.0)}, unit_square());
  // Pairwise squared gaps 1, 9, 4 over unit total weight.
  CHECK(ssd_objective(db, quad, 0.0) == doctest::Approx(14.0 / 6.0));

  // Identical constants, one shifted input map: values unchanged, only the
  // penalty contributes: (delta/2) * 0.1^2 = 0.01.
  AlignedDatabase same = identity_db({constant(5.0), constant(5.0)},
                                     unit_square());
  same.transforms[1].axis_shift[0] = 0.1;
  CHECK(ssd_objective(same, quad, 0.0) == 0.0);
  CHECK(ssd_objective(same, quad, 2.0) == doctest::Approx(0.01));

  CHECK_THROWS_AS(ssd_objective(same, quad, -1.0), std::invalid_argument);
}

TEST_CASE("ssd objective of a unit offset pair") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_interval(), 11);
  AlignedDatabase db = identity_db(
      {make_surface([](const VectorXd& x) { return x[0]; }),
       make_surface([](const VectorXd& x) { return x[0] + 1.0; })},
      unit_interval());
  CHECK(ssd_objective(db, quad, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("default penalty weight from value ranges") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_interval(), 11);
  const std::vector<SurfacePtr> entries = {
      make_surface([](const VectorXd& x) { return x[0]; }), constant(7.0)};
  CHECK(default_alignment_delta(entries, quad) ==
        doctest::Approx(5e-4).epsilon(1e-12));
}

TEST_CASE("normal equations match the explicit jacobian reference") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_square(), 7);
  AlignedDatabase db = identity_db(smooth_entries(), unit_square());
  set_test_transforms(db);
  const double delta = 0.37;

  const NormalEquations fast = alignment_normal_equations(db, quad, delta);
  const NormalEquations slow =
      reference::alignment_normal_equations(db, quad, delta);

  const double jtj_scale = slow.jtj.cwiseAbs().maxCoeff();
  const double jtr_scale = slow.jtr.cwiseAbs().maxCoeff();
  CHECK((fast.jtj - slow.jtj).cwiseAbs().maxCoeff() <= 1e-10 * jtj_scale);
  CHECK((fast.jtr - slow.jtr).cwiseAbs().maxCoeff() <= 1e-10 * jtr_scale);
  CHECK(fast.objective ==
        doctest::Approx(slow.objective).epsilon(1e-12));
  CHECK(fast.objective ==
        doctest::Approx(ssd_objective(db, quad, delta)).epsilon(1e-12));
}

TEST_CASE("normal equations gradient matches finite differences") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_square(), 6);
  AlignedDatabase db = identity_db(smooth_entries(), unit_square());
  set_test_transforms(db);
  const double delta = 0.11;

  const VectorXd z0 = pack_free_transforms(db);
  const NormalEquations ne = alignment_normal_equations(db, quad, delta);
  const VectorXd grad = 2.0 * ne.jtr;  // objective is |residual|^2

  VectorXd fd(z0.size());
  AlignedDatabase probe = db;
  for (int c = 0; c < z0.size(); ++c) {
    const double h = 1e-6 * (1.0 + std::abs(z0[c]));
    VectorXd zp = z0, zm = z0;
    zp[c] += h;
    zm[c] -= h;
    set_free_transforms(probe, zp);
    const double up = ssd_objective(probe, quad, delta);
    set_free_transforms(probe, zm);
    const double down = ssd_objective(probe, quad, delta);
    fd[c] = (up - down) / (2.0 * h);
  }
  const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
  CHECK((grad - fd).cwiseAbs().maxCoeff() <= 1e-5 * scale);
}

TEST_CASE("objective is invariant under entry reordering") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_square(), 6);
  AlignedDatabase db = identity_db(smooth_entries(), unit_square());
  set_test_transforms(db);

  AlignedDatabase swapped = db;
  std::swap(swapped.entries[1], swapped.entries[2]);
  std::swap(swapped.transforms[1], swapped.transforms[2]);

  const double a = ssd_objective(db, quad, 0.29);
  const double b = ssd_objective(swapped, quad, 0.29);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("identical entries stay at the identity") {
  const auto f = make_surface([](const VectorXd& x) {
    return std::sin(2.0 * x[0]) + 0.3 * x[1];
  });
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_square(), 9);
  const AlignedDatabase aligned =
      align_database({f, f, f}, unit_square(), quad, 1e-8);
  for (int t = 0; t < aligned.size(); ++t)
    CHECK(aligned.transforms[t].is_identity(1e-12));
  CHECK(ssd_objective(aligned, quad, 1e-8) <= 1e-16);
}

TEST_CASE("alignment recovers a known input shift") {
  const double shift = 0.08;
  const auto f = [](double x) { return std::sin(2.2 * x) + 0.5 * x * x; };
  const std::vector<SurfacePtr> entries = {
      make_surface([f](const VectorXd& x) { return f(x[0]); }),
      make_surface([f, shift](const VectorXd& x) { return f(x[0] - shift); }),
  };
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_interval(), 41);

  AlignedDatabase before = identity_db(entries, unit_interval());
  const double pre = ssd_objective(before, quad, 0.0);
  REQUIRE(pre > 1e-5);

  const AlignedDatabase aligned =
      align_database(entries, unit_interval(), quad, 0.0);
  const double post = ssd_objective(aligned, quad, 0.0);
  CHECK(post <= 0.01 * pre);
  CHECK(aligned.transforms[1].axis_shift[0] ==
        doctest::Approx(shift).epsilon(0.05));

  // Monotone descent from the identity start.
  CHECK(post <= pre);
}

TEST_CASE("a large penalty pins the transforms near the identity") {
  const double shift = 0.08;
  const auto f = [](double x) { return std::sin(2.2 * x) + 0.5 * x * x; };
  const std::vector<SurfacePtr> entries = {
      make_surface([f](const VectorXd& x) { return f(x[0]); }),
      make_surface([f, shift](const VectorXd& x) { return f(x[0] - shift); }),
  };
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_interval(), 21);
  const AlignedDatabase aligned =
      align_database(entries, unit_interval(), quad, 1e6);
  CHECK(aligned.transforms[1].pack().cwiseAbs().maxCoeff() <= 1e-3);
}

TEST_CASE("preimages beyond the extension margin throw") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_interval(), 5);
  AlignedDatabase db = identity_db(
      {make_surface([](const VectorXd& x) { return x[0]; }),
       make_surface([](const VectorXd& x) { return x[0]; })},
      unit_interval());
  db.transforms[1].axis_shift[0] = 0.5;
  CHECK_THROWS_AS(ssd_objective(db, quad, 0.0), DomainEscape);
  CHECK_THROWS_AS(alignment_normal_equations(db, quad, 0.0), DomainEscape);
}

#ifdef _OPENMP
TEST_CASE("accumulation does not depend on the thread count") {
  const QuadratureRule quad =
      QuadratureRule::tensor_trapezoid(unit_square(), 13);
  AlignedDatabase db = identity_db(smooth_entries(), unit_square());
  set_test_transforms(db);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const NormalEquations serial = alignment_normal_equations(db, quad, 0.2);
  omp_set_num_threads(saved);
  const NormalEquations parallel = alignment_normal_equations(db, quad, 0.2);

  CHECK((serial.jtj - parallel.jtj).cwiseAbs().maxCoeff() == 0.0);
  CHECK((serial.jtr - parallel.jtr).cwiseAbs().maxCoeff() == 0.0);
  CHECK(serial.objective == parallel.objective);
}
#endif

TEST_CASE("damped gauss-newton driver on a linear least squares problem") {
  MatrixXd a(4, 2);
  a << 1, 0, 0, 1, 1, 1, 1, -1;
  VectorXd b(4);
  b << 1, 2, 2, 0;
  const VectorXd z_best =
      (a.transpose() * a).ldlt().solve(a.transpose() * b);

  const auto assemble = [&](const VectorXd& z) {
    NormalEquations ne;
    ne.jtj = a.transpose() * a;
    ne.jtr = a.transpose() * (a * z - b);
    ne.objective = (a * z - b).squaredNorm();
    return ne;
  };
  const auto objective = [&](const VectorXd& z) {
    return (a * z - b).squaredNorm();
  };

  const LmOutcome fit =
      levenberg_marquardt(assemble, objective, VectorXd::Zero(2));
  CHECK((fit.z - z_best).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(fit.accepted_steps >= 1);
  CHECK(fit.objective == doctest::Approx((a * z_best - b).squaredNorm()));
}

TEST_CASE("gauss-newton driver edge cases") {
  MatrixXd a(2, 1);
  a << 1, 2;
  const VectorXd z_true = vec1(3.0);
  const VectorXd b = a * z_true;  // consistent system, zero residual

  const auto assemble = [&](const VectorXd& z) {
    NormalEquations ne;
    ne.jtj = a.transpose() * a;
    ne.jtr = a.transpose() * (a * z - b);
    ne.objective = (a * z - b).squaredNorm();
    return ne;
  };
  const auto objective = [&](const VectorXd& z) {
    return (a * z - b).squaredNorm();
  };

  // Stationary start: returns unchanged without accepting a step.
  const LmOutcome still = levenberg_marquardt(assemble, objective, z_true);
  CHECK(still.accepted_steps == 0);
  CHECK((still.z - z_true).cwiseAbs().maxCoeff() == 0.0);

  // Infeasible start.
  const auto inf_objective = [](const VectorXd&) {
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(
      levenberg_marquardt(assemble, inf_objective, vec1(0.0)),
      std::invalid_argument);

  // Feasible only at the start with a real gradient: no candidate can be
  // accepted, which is a genuine failure to descend.
  const auto pinned_objective = [&](const VectorXd& z) {
    return z[0] == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(
      levenberg_marquardt(assemble, pinned_objective, vec1(0.0)), NoDescent);
}
