#pragma once

#include <cstdint>

namespace dfit {

/// OpenMP-backed loop over [0, n). `parallel = false` runs the plain serial
/// loop; parallel results are bitwise identical for kernels with disjoint
/// writes and no cross-iteration reductions.
template <class Body>
void parallel_for(std::int64_t n, bool parallel, Body&& body) {
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace dfit
