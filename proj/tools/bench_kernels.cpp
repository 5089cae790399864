// Times the serial reference kernels against their OpenMP counterparts:
// dense matmuls, TPS kernel-matrix assembly, basis feature evaluation, and
// Cholesky. Run with --quick for a fast smoke pass.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>

#include "sphkrig/basis.hpp"
#include "sphkrig/kernels.hpp"
#include "sphkrig/linalg.hpp"
#include "sphkrig/parallel.hpp"
#include "sphkrig/rng.hpp"
#include "sphkrig/sim.hpp"
#include "sphkrig/sphere.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace sphkrig;

double time_best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  const int repeats = quick ? 1 : 3;
  const std::size_t nm = quick ? 128 : 768;   // matmul size
  const std::size_t knots = quick ? 64 : 400; // kernel matrix / basis size
  const std::size_t npts = quick ? 256 : 4000;
  const std::size_t nchol = quick ? 128 : 1200;

  std::printf("sphkrig kernel benchmark (thread cap %d)\n", par::max_threads());

  Rng rng(42);
  const Matrix a = random_matrix(nm, nm, rng);
  const Matrix b = random_matrix(nm, nm, rng);
  report("matmul",
         time_best_of(repeats, [&] { kernels::matmul_serial(a, b); }),
         time_best_of(repeats, [&] { kernels::matmul(a, b); }));
  report("matmul_nt",
         time_best_of(repeats, [&] { kernels::matmul_nt_serial(a, b); }),
         time_best_of(repeats, [&] { kernels::matmul_nt(a, b); }));
  report("matmul_tn",
         time_best_of(repeats, [&] { kernels::matmul_tn_serial(a, b); }),
         time_best_of(repeats, [&] { kernels::matmul_tn(a, b); }));

  const auto kn = fibonacci_knots(knots);
  const BasisSystem sys = build_spherical_mrts(kn, knots);
  Rng prng(7);
  const auto pts = sample_uniform_sphere(npts, prng);
  {
    const int cap = par::max_threads();
    par::set_max_threads(1);
    const double serial_ms = time_best_of(repeats, [&] { build_spherical_mrts(kn, knots); });
    par::set_max_threads(cap);
    const double parallel_ms = time_best_of(repeats, [&] { build_spherical_mrts(kn, knots); });
    report("mrts_build (incl. eig)", serial_ms, parallel_ms);
  }
  report("feature_eval",
         time_best_of(repeats, [&] { eval_features_serial(sys, pts); }),
         time_best_of(repeats, [&] { eval_features(sys, pts); }));

  {
    Matrix spd(nchol, nchol);
    for (std::size_t i = 0; i < nchol; ++i)
      for (std::size_t j = 0; j < nchol; ++j)
        spd(i, j) = std::exp(-0.5 * std::fabs(double(i) - double(j)) / 10.0);
    const SymMatrix sm(std::move(spd));
    const int cap = par::max_threads();
    par::set_max_threads(1);
    const double serial_ms = time_best_of(repeats, [&] { cholesky(sm, 1e-10); });
    par::set_max_threads(cap);
    const double parallel_ms = time_best_of(repeats, [&] { cholesky(sm, 1e-10); });
    report("cholesky", serial_ms, parallel_ms);
  }
  return 0;
}
