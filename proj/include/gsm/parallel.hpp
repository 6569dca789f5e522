#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gsm {

inline constexpr std::int64_t kReduceChunk = 256;

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Deterministic parallel reduction: items are split into fixed-size chunks,
// each chunk accumulates sequentially into its own partial, and the partials
// are merged serially in chunk order. The result is bitwise identical for
// any thread count.
template <class Partial, class Body, class Merge>
void chunked_reduce(std::int64_t n, const Partial& zero, Body&& body,
                    Merge&& merge) {
  const std::int64_t nchunks = (n + kReduceChunk - 1) / kReduceChunk;
  std::vector<Partial> partials(static_cast<std::size_t>(nchunks), zero);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t c = 0; c < nchunks; ++c) {
    Partial& p = partials[static_cast<std::size_t>(c)];
    const std::int64_t lo = c * kReduceChunk;
    const std::int64_t hi = std::min(n, lo + kReduceChunk);
    for (std::int64_t i = lo; i < hi; ++i) body(i, p);
  }
  for (std::int64_t c = 0; c < nchunks; ++c)
    merge(partials[static_cast<std::size_t>(c)]);
}

}  // namespace gsm
