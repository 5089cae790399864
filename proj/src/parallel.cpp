#include "sphkrig/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sphkrig::par {

namespace {

int resolve_default() {
  if (const char* env = std::getenv("SPHKRIG_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int>& cap() {
  static std::atomic<int> value{resolve_default()};
  return value;
}

}  // namespace

int max_threads() { return cap().load(std::memory_order_relaxed); }

void set_max_threads(int n) {
  if (n < 1) n = 1;
  cap().store(n, std::memory_order_relaxed);
}

}  // namespace sphkrig::par
