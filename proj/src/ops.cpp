#include "topotrack/ops.hpp"

#include <algorithm>

#include "topotrack/errors.hpp"

namespace topotrack {

Matrix softmax_rows(const Matrix& m) {
  if (m.empty()) throw DimensionError("softmax_rows: empty matrix");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in = m.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (double& v : o) v /= sum;
  }
  return out;
}

Matrix softmax_cols(const Matrix& m) {
  if (m.empty()) throw DimensionError("softmax_cols: empty matrix");
  return transposed(softmax_rows(transposed(m)));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: length mismatch");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

}  // namespace topotrack
