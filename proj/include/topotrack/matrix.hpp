#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace topotrack {

class SeededRng;

/// Dense row-major matrix of doubles. The only data container used by the
/// numeric core; everything larger (graphs, score matrices, embeddings) is
/// built from it.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix random_uniform(std::size_t rows, std::size_t cols, double lo, double hi,
                               SeededRng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
bool operator==(const Matrix& a, const Matrix& b);

Matrix transposed(const Matrix& m);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix elementwise_min(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace topotrack
