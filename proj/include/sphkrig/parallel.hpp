#ifndef SPHKRIG_PARALLEL_HPP
#define SPHKRIG_PARALLEL_HPP

namespace sphkrig::par {

// Thread cap used by all OpenMP regions. Resolved once from the
// SPHKRIG_THREADS environment variable (falls back to the OpenMP default),
// overridable at runtime. Every parallel loop in this project partitions
// independent outputs across threads and accumulates each output serially,
// so results are bit-identical for any thread count.
int max_threads();
void set_max_threads(int n);

}  // namespace sphkrig::par

#endif
