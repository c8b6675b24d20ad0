#include "topotrack/matrix.hpp"

#include <cmath>

#include "topotrack/errors.hpp"
#include "topotrack/rng.hpp"

namespace topotrack {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix Matrix::random_uniform(std::size_t rows, std::size_t cols, double lo, double hi,
                              SeededRng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data_) v = rng.uniform(lo, hi);
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) throw DimensionError("matrix +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (!same_shape(other)) throw DimensionError("matrix -=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

bool operator==(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i)
    if (da[i] != db[i]) return false;
  return true;
}

Matrix transposed(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("hadamard: shape mismatch");
  Matrix out = a;
  auto d = out.data();
  auto db = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= db[i];
  return out;
}

Matrix elementwise_min(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("elementwise_min: shape mismatch");
  Matrix out = a;
  auto d = out.data();
  auto db = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::min(d[i], db[i]);
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
  double d = 0.0;
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) d = std::max(d, std::abs(da[i] - db[i]));
  return d;
}

}  // namespace topotrack
