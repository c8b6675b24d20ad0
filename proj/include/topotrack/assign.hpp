#pragma once

#include <cstddef>
#include <vector>

#include "topotrack/matrix.hpp"

namespace topotrack {

struct PairMatch {
  std::size_t row = 0;
  std::size_t col = 0;
  double score = 0.0;
};

struct AssignmentResult {
  std::vector<PairMatch> matches;          // at most one per row and per column
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;

  double total() const;
};

/// Accept candidate pairs with score >= tau in descending score order (ties by
/// smaller row, then smaller column), skipping pairs whose row or column is
/// already taken.
AssignmentResult greedy_match(const Matrix& scores, double tau);

/// Maximum-total-score assignment over pairs with score >= tau; pairs may be
/// left unassigned, so entries that cannot improve the total are never chosen.
AssignmentResult hungarian_match(const Matrix& scores, double tau);

}  // namespace topotrack
