#include "topotrack/assign.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topotrack/errors.hpp"

namespace topotrack {

double AssignmentResult::total() const {
  double t = 0.0;
  for (const auto& m : matches) t += m.score;
  return t;
}

namespace {

void check_finite(const Matrix& scores) {
  if (!scores.all_finite()) throw NumericError("assignment: score matrix has non-finite entries");
}

AssignmentResult finalize(const Matrix& scores, std::vector<std::ptrdiff_t>& row_to_col) {
  AssignmentResult out;
  std::vector<bool> col_used(scores.cols(), false);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (row_to_col[i] >= 0) {
      const std::size_t j = static_cast<std::size_t>(row_to_col[i]);
      out.matches.push_back({i, j, scores(i, j)});
      col_used[j] = true;
    } else {
      out.unmatched_rows.push_back(i);
    }
  }
  for (std::size_t j = 0; j < scores.cols(); ++j)
    if (!col_used[j]) out.unmatched_cols.push_back(j);
  return out;
}

}  // namespace

AssignmentResult greedy_match(const Matrix& scores, double tau) {
  check_finite(scores);
  struct Candidate {
    double score;
    std::size_t row, col;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < scores.rows(); ++i)
    for (std::size_t j = 0; j < scores.cols(); ++j)
      if (scores(i, j) >= tau) candidates.push_back({scores(i, j), i, j});
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.row != b.row) return a.row < b.row;
    return a.col < b.col;
  });

  std::vector<std::ptrdiff_t> row_to_col(scores.rows(), -1);
  std::vector<bool> col_used(scores.cols(), false);
  for (const auto& c : candidates) {
    if (row_to_col[c.row] >= 0 || col_used[c.col]) continue;
    row_to_col[c.row] = static_cast<std::ptrdiff_t>(c.col);
    col_used[c.col] = true;
  }
  return finalize(scores, row_to_col);
}

AssignmentResult hungarian_match(const Matrix& scores, double tau) {
  check_finite(scores);
  const std::size_t n = scores.rows();
  const std::size_t m = scores.cols();
  if (n == 0 || m == 0) {
    std::vector<std::ptrdiff_t> none(n, -1);
    return finalize(scores, none);
  }

  // Square profit matrix; infeasible and non-improving cells carry profit 0,
  // which makes "leave unassigned" available to the optimum.
  const std::size_t k = std::max(n, m);
  Matrix profit(k, k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double s = scores(i, j);
      if (s >= tau && s > 0.0) profit(i, j) = s;
    }

  // Shortest-augmenting-path assignment on cost = -profit (1-based arrays).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<std::size_t> col_to_row(k + 1, 0), way(k + 1, 0);
  for (std::size_t i = 1; i <= k; ++i) {
    col_to_row[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(k + 1, inf);
    std::vector<bool> used(k + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = col_to_row[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = -profit(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[col_to_row[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_to_row[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      col_to_row[j0] = col_to_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::ptrdiff_t> row_to_col(n, -1);
  for (std::size_t j = 1; j <= k; ++j) {
    const std::size_t i = col_to_row[j];
    if (i == 0) continue;
    if (i - 1 < n && j - 1 < m && profit(i - 1, j - 1) > 0.0)
      row_to_col[i - 1] = static_cast<std::ptrdiff_t>(j - 1);
  }
  return finalize(scores, row_to_col);
}

}  // namespace topotrack
