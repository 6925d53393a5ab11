#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace advfilt {

/// Selects between the OpenMP kernels and their serial reference loops.
/// Both paths produce bit-identical results: work items write to their own
/// slots and any reduction happens afterwards in a fixed order.
enum class Exec { Serial, Parallel };

/// Exceptions thrown by fn are carried out of the parallel region; the one
/// from the lowest index is rethrown, matching what the serial loop raises.
template <typename Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  const auto count = static_cast<std::int64_t>(n);
  if (exec == Exec::Parallel) {
    std::exception_ptr first;
    std::int64_t first_at = count;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < count; ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(advfilt_for_each_error)
        if (i < first_at) {
          first_at = i;
          first = std::current_exception();
        }
      }
    }
    if (first) std::rethrow_exception(first);
  } else {
    for (std::int64_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  }
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace advfilt
