// Timing comparison of the parallel kernels against their serial reference
// implementations, plus the two normal-equation assemblies. Prints one line
// per kernel with the speedup; numbers are medians of repeated runs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "gsm/alignment.hpp"
#include "gsm/kernels.hpp"
#include "gsm/sampling.hpp"
#include "gsm/testbed.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace gsm;

namespace {

double median_ms(const std::function<void()>& fn, int runs) {
  std::vector<double> times;
  times.reserve(runs);
  fn();  // warm up
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void report(const char* name, double parallel_ms, double serial_ms) {
  std::printf("%-28s parallel %9.3f ms   serial %9.3f ms   speedup %5.2fx\n",
              name, parallel_ms, serial_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  const int runs = 9;
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif

  const SyntheticDatabase db = build_synthetic_database(8, 17, true);
  const Domain& domain = db.domain;
  const QuadratureRule quad = QuadratureRule::tensor_trapezoid(domain, 161);
  std::vector<TransformQ> transforms(db.entries.size(),
                                     TransformQ::identity(2));
  for (std::size_t j = 1; j < transforms.size(); ++j) {
    transforms[j].axis_shift[0] = 0.004 * static_cast<double>(j);
    transforms[j].value_scale = 0.01 * static_cast<double>(j);
  }

  {
    const TransformQ& q = transforms[1];
    const double par =
        median_ms([&] { volatile auto r = kernels::map_points(quad.nodes, q); (void)r; }, runs);
    const double ser =
        median_ms([&] { volatile auto r = reference::map_points(quad.nodes, q); (void)r; }, runs);
    report("map_points", par, ser);
  }

  MatrixXd table;
  {
    const double par = median_ms(
        [&] { table = kernels::eval_table(db.entries, transforms, quad.nodes); },
        runs);
    MatrixXd ref_table;
    const double ser = median_ms(
        [&] {
          ref_table = reference::eval_table(db.entries, transforms, quad.nodes);
        },
        runs);
    report("eval_table", par, ser);
    std::printf("  max |difference| = %.3e\n",
                (table - ref_table).cwiseAbs().maxCoeff());
  }

  {
    MatrixXd gram;
    const double par = median_ms(
        [&] { gram = kernels::weighted_gram(table, quad.weights); }, runs);
    MatrixXd ref_gram;
    const double ser = median_ms(
        [&] { ref_gram = reference::weighted_gram(table, quad.weights); },
        runs);
    report("weighted_gram", par, ser);
    std::printf("  max |difference| = %.3e\n",
                (gram - ref_gram).cwiseAbs().maxCoeff());
  }

  {
    AlignedDatabase adb{db.entries, transforms, domain,
                        domain.inflated(kDomainExtension)};
    adb.validate();
    const QuadratureRule coarse = QuadratureRule::tensor_trapezoid(domain, 41);
    const double delta = 1e-3;
    NormalEquations ne;
    const double par = median_ms(
        [&] { ne = alignment_normal_equations(adb, coarse, delta); }, runs);
    NormalEquations ref_ne;
    const double ser = median_ms(
        [&] { ref_ne = reference::alignment_normal_equations(adb, coarse, delta); },
        runs);
    report("alignment_normal_equations", par, ser);
    std::printf("  max |J^T J difference| = %.3e\n",
                (ne.jtj - ref_ne.jtj).cwiseAbs().maxCoeff());
  }

  return 0;
}
