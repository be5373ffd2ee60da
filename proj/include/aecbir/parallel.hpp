#pragma once

#include <cstddef>
#include <exception>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aecbir {

// Worker count used when callers pass workers <= 0.
inline int default_workers() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline int resolve_workers(int workers) { return workers > 0 ? workers : default_workers(); }

// Static-schedule parallel loop over [0, n). An exception thrown by `fn` is
// captured and rethrown on the calling thread; when several iterations
// throw, the one with the lowest index wins so failures are reproducible.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, int workers, Fn&& fn) {
  std::exception_ptr error;
  std::ptrdiff_t error_index = std::numeric_limits<std::ptrdiff_t>::max();
  [[maybe_unused]] const int threads = resolve_workers(workers);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(aecbir_parallel_for_error)
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace aecbir
