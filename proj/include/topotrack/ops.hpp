#pragma once

#include <cmath>
#include <span>

#include "topotrack/matrix.hpp"

namespace topotrack {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Row-wise softmax with max-subtraction. Every output row sums to 1.
Matrix softmax_rows(const Matrix& m);

/// Column-wise softmax, defined as the transpose-dual of softmax_rows.
Matrix softmax_cols(const Matrix& m);

/// Cosine similarity in [-1, 1]; returns 0 when either norm is below 1e-12.
double cosine(std::span<const double> a, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

}  // namespace topotrack
