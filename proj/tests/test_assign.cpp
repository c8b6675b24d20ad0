#include <cmath>

#include "doctest.h"
#include "support/oracles.hpp"
#include "topotrack/assign.hpp"
#include "topotrack/errors.hpp"
#include "topotrack/rng.hpp"

using namespace topotrack;

namespace {

double row_ordered_total(const AssignmentResult& r) {
  // matches are already emitted in ascending row order
  double t = 0.0;
  for (const auto& m : r.matches) t += m.score;
  return t;
}

void check_one_to_one(const AssignmentResult& r, std::size_t rows, std::size_t cols) {
  std::vector<int> row_hits(rows, 0), col_hits(cols, 0);
  for (const auto& m : r.matches) {
    ++row_hits[m.row];
    ++col_hits[m.col];
  }
  for (int h : row_hits) CHECK(h <= 1);
  for (int h : col_hits) CHECK(h <= 1);
}

}  // namespace

TEST_CASE("greedy_match: hand cases") {
  const Matrix s = Matrix::from_rows({{0.9, 0.1}, {0.8, 0.7}});
  const AssignmentResult r = greedy_match(s, 0.0);
  REQUIRE(r.matches.size() == 2);
  CHECK(r.matches[0].row == 0);
  CHECK(r.matches[0].col == 0);
  CHECK(r.matches[0].score == 0.9);
  CHECK(r.matches[1].row == 1);
  CHECK(r.matches[1].col == 1);
  CHECK(r.matches[1].score == 0.7);

  // diagonal dominance gives the identity matching
  const Matrix diag = Matrix::from_rows({{0.9, 0.2, 0.1}, {0.3, 0.8, 0.2}, {0.1, 0.3, 0.7}});
  const AssignmentResult rd = greedy_match(diag, 0.0);
  REQUIRE(rd.matches.size() == 3);
  for (const auto& m : rd.matches) CHECK(m.row == m.col);

  const AssignmentResult none = greedy_match(s, 0.95);
  CHECK(none.matches.empty());
  CHECK(none.unmatched_rows == std::vector<std::size_t>{0, 1});
  CHECK(none.unmatched_cols == std::vector<std::size_t>{0, 1});
}

TEST_CASE("hungarian_match: hand cases") {
  const Matrix s = Matrix::from_rows({{0.9, 0.1}, {0.8, 0.7}});
  CHECK(hungarian_match(s, 0.0).total() == doctest::Approx(1.6).epsilon(1e-12));

  const Matrix s2 = Matrix::from_rows({{0.5, 0.4}, {0.6, 0.1}});
  CHECK(hungarian_match(s2, 0.0).total() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(greedy_match(s2, 0.0).total() == doctest::Approx(1.0).epsilon(1e-12));

  const Matrix one = Matrix::from_rows({{0.42}});
  const AssignmentResult r1 = hungarian_match(one, 0.1);
  REQUIRE(r1.matches.size() == 1);
  CHECK(r1.matches[0].score == 0.42);
  CHECK(hungarian_match(one, 0.5).matches.empty());
}

TEST_CASE("hungarian_match equals brute force on 1000 seeded matrices up to 6x6") {
  SeededRng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    const std::size_t m = 1 + rng.uniform_index(6);
    const bool negatives = trial % 4 == 3;
    Matrix s(n, m);
    for (double& v : s.data()) v = negatives ? rng.uniform(-1.0, 1.0) : rng.uniform(0.0, 1.0);
    const double tau = trial % 3 == 0 ? 0.0 : rng.uniform(0.0, 0.5);

    const AssignmentResult h = hungarian_match(s, tau);
    const testing::BruteForceResult bf = testing::brute_force_assignment(s, tau);
    CHECK(row_ordered_total(h) == bf.total);
    check_one_to_one(h, n, m);
    for (const auto& match : h.matches) CHECK(match.score >= tau);
  }
}

TEST_CASE("greedy_match: constraints always hold and total is at least half of optimal") {
  SeededRng rng(555);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(6);
    const std::size_t m = 1 + rng.uniform_index(6);
    Matrix s(n, m);
    for (double& v : s.data()) v = rng.uniform(0.0, 1.0);

    const AssignmentResult g = greedy_match(s, 0.0);
    check_one_to_one(g, n, m);
    const double opt = testing::brute_force_assignment(s, 0.0).total;
    CHECK(g.total() >= 0.5 * opt);
    CHECK(g.total() <= opt + 1e-12);
  }
}

TEST_CASE("greedy_match: selected pairs are invariant to positive rescaling at tau 0") {
  SeededRng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix s(4, 5);
    for (double& v : s.data()) v = rng.uniform(0.0, 1.0);
    const double c = rng.uniform(0.01, 100.0);
    Matrix scaled = s;
    scaled *= c;

    const AssignmentResult a = greedy_match(s, 0.0);
    const AssignmentResult b = greedy_match(scaled, 0.0);
    REQUIRE(a.matches.size() == b.matches.size());
    for (std::size_t i = 0; i < a.matches.size(); ++i) {
      CHECK(a.matches[i].row == b.matches[i].row);
      CHECK(a.matches[i].col == b.matches[i].col);
    }
  }
}

TEST_CASE("assignment rejects non-finite scores") {
  Matrix bad(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(greedy_match(bad, 0.0), NumericError);
  CHECK_THROWS_AS(hungarian_match(bad, 0.0), NumericError);
}
