#pragma once

#include <cstddef>

#include "topotrack/matrix.hpp"

namespace topotrack::kernels {

// Work below this element count stays on one thread; the scenes this engine
// targets produce matrices far smaller than the threshold, so tracking runs
// are single-threaded unless the caller batches something big.
inline constexpr std::size_t kParallelThreshold = 64 * 64;

/// Serial reference product, kept as the oracle for the parallel kernel.
Matrix matmul_serial(const Matrix& a, const Matrix& b);

/// OpenMP product. Each output element is computed by exactly one thread with
/// the same inner-loop order as the serial kernel, so results are bit-identical
/// to matmul_serial for any thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Apply f(i, j) over the n x m index grid in parallel. f must only write
/// state owned by cell (i, j).
template <class F>
void for_each_pair(std::size_t n, std::size_t m, F&& f) {
  const std::ptrdiff_t total = static_cast<std::ptrdiff_t>(n * m);
#pragma omp parallel for schedule(static) if (static_cast<std::size_t>(total) >= kParallelThreshold)
  for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
    const std::size_t i = static_cast<std::size_t>(idx) / m;
    const std::size_t j = static_cast<std::size_t>(idx) % m;
    f(i, j);
  }
}

template <class F>
void for_each_pair_serial(std::size_t n, std::size_t m, F&& f) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) f(i, j);
}

}  // namespace topotrack::kernels
