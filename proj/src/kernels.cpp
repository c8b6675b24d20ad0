#include "topotrack/kernels.hpp"

#include "topotrack/errors.hpp"

namespace topotrack::kernels {

namespace {

inline void product_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  auto arow = a.row(i);
  auto orow = out.row(i);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = arow[p];
    if (av == 0.0) continue;
    auto brow = b.row(p);
    for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
  }
}

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) product_row(a, b, out, i);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (a.rows() * b.cols() >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) product_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

}  // namespace topotrack::kernels
