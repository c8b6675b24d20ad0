#include <cmath>

#include "doctest.h"
#include "topotrack/errors.hpp"
#include "topotrack/graph.hpp"
#include "topotrack/rng.hpp"

using namespace topotrack;

namespace {

BoundingBox box_at(double ncx, double ncy, double w = 40.0, double h = 80.0) {
  BoundingBox b;
  b.frame_w = 1000.0;
  b.frame_h = 1000.0;
  b.width = w;
  b.height = h;
  b.left = ncx * b.frame_w - w / 2.0;
  b.top = ncy * b.frame_h - h / 2.0;
  return b;
}

Detection det_at(double ncx, double ncy, std::vector<double> descriptor) {
  Detection d;
  d.box = box_at(ncx, ncy);
  d.descriptor = std::move(descriptor);
  return d;
}

FrameGraph two_node_unit_graph() {
  // two nodes joined by a unit-weight edge; features are the standard basis
  FrameGraph g;
  g.n = 2;
  g.features = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  g.weights = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
  g.binary = g.weights;
  g.boxes = {box_at(0.4, 0.5), box_at(0.45, 0.5)};
  return g;
}

}  // namespace

TEST_CASE("box_distance: hand cases") {
  CHECK(box_distance(box_at(0.3, 0.7), box_at(0.3, 0.7)) == 0.0);
  CHECK(box_distance(box_at(0.50, 0.50), box_at(0.55, 0.50)) ==
        doctest::Approx(0.05).epsilon(1e-12));

  BoundingBox other = box_at(0.5, 0.5);
  other.frame_w = 500.0;
  CHECK_THROWS_AS(box_distance(box_at(0.5, 0.5), other), DimensionError);

  SeededRng rng(5);
  for (int i = 0; i < 30; ++i) {
    const BoundingBox a = box_at(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
    const BoundingBox b = box_at(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
    CHECK(box_distance(a, b) == box_distance(b, a));
  }
}

TEST_CASE("build_edges: distance threshold picks exactly the close pair") {
  const std::vector<BoundingBox> boxes = {box_at(0.50, 0.50), box_at(0.55, 0.50),
                                          box_at(0.70, 0.50)};
  const Matrix adj = build_edges(boxes, GraphStrategy::threshold(0.1));
  CHECK(adj(0, 1) == 1.0);
  CHECK(adj(1, 0) == 1.0);
  CHECK(adj(0, 2) == 0.0);
  CHECK(adj(1, 2) == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(adj(i, i) == 0.0);
}

TEST_CASE("build_edges: singleton, fully connected, knn union symmetry") {
  CHECK(build_edges({box_at(0.5, 0.5)}, GraphStrategy::threshold(0.1)).rows() == 1);
  CHECK(frobenius_norm(build_edges({box_at(0.5, 0.5)}, GraphStrategy::full())) == 0.0);

  const std::vector<BoundingBox> three = {box_at(0.1, 0.1), box_at(0.5, 0.5), box_at(0.9, 0.9)};
  const Matrix full = build_edges(three, GraphStrategy::full());
  std::size_t edges = 0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      if (full(i, j) == 1.0) ++edges;
  CHECK(edges == 3);

  // knn with k=1: middle node is nearest to both ends, union keeps both edges
  const std::vector<BoundingBox> line = {box_at(0.1, 0.5), box_at(0.4, 0.5), box_at(0.9, 0.5)};
  const Matrix knn = build_edges(line, GraphStrategy::knn(1));
  CHECK(knn(0, 1) == 1.0);
  CHECK(knn(1, 2) == 1.0);
  CHECK(knn(0, 2) == 0.0);
  CHECK(knn == transposed(knn));
}

TEST_CASE("build_edges: threshold strategy is translation invariant") {
  SeededRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<BoundingBox> boxes, shifted;
    const double dx = rng.uniform(-0.2, 0.2);
    const double dy = rng.uniform(-0.2, 0.2);
    for (int i = 0; i < 6; ++i) {
      const double x = rng.uniform(0.2, 0.8);
      const double y = rng.uniform(0.2, 0.8);
      boxes.push_back(box_at(x, y));
      shifted.push_back(box_at(x + dx, y + dy));
    }
    const GraphStrategy s = GraphStrategy::threshold(0.15);
    CHECK(build_edges(boxes, s) == build_edges(shifted, s));
  }
}

TEST_CASE("edge_weight: zero layer gives sigmoid(0) = 0.5 and range stays in (0,1)") {
  const std::size_t f = 4;
  FeedForwardLayer layer = FeedForwardLayer::zeros(1, 2 * f + 8, Activation::sigmoid);
  const std::vector<double> xi = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> xj = {-1.0, 0.5, 0.0, 2.0};
  CHECK(edge_weight(layer, xi, xj, box_at(0.2, 0.2), box_at(0.8, 0.8)) == 0.5);

  SeededRng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const FeedForwardLayer random_layer =
        FeedForwardLayer::random(1, 2 * f + 8, Activation::sigmoid, rng);
    std::vector<double> a(f), b(f);
    for (auto& v : a) v = rng.uniform(-3.0, 3.0);
    for (auto& v : b) v = rng.uniform(-3.0, 3.0);
    const double w = edge_weight(random_layer, a, b, box_at(0.3, 0.3), box_at(0.6, 0.6));
    CHECK(w > 0.0);
    CHECK(w < 1.0);
    CHECK(edge_weight(random_layer, a, b, box_at(0.3, 0.3), box_at(0.6, 0.6)) == w);
  }

  FeedForwardLayer wrong = FeedForwardLayer::zeros(1, 3, Activation::sigmoid);
  CHECK_THROWS_AS(edge_weight(wrong, xi, xj, box_at(0.1, 0.1), box_at(0.2, 0.2)),
                  DimensionError);
}

TEST_CASE("build_graph: three-box example has exactly one symmetric nonzero pair") {
  SeededRng rng(13);
  const FeedForwardLayer layer = FeedForwardLayer::random(1, 2 * 2 + 8, Activation::sigmoid, rng);
  const std::vector<Detection> dets = {det_at(0.50, 0.50, {1.0, 0.0}),
                                       det_at(0.55, 0.50, {0.0, 1.0}),
                                       det_at(0.70, 0.50, {1.0, 1.0})};
  const FrameGraph g = build_graph(dets, GraphStrategy::threshold(0.1), layer);
  CHECK(g.n == 3);
  CHECK(g.weights(0, 1) > 0.0);
  CHECK(g.weights(0, 1) == g.weights(1, 0));
  CHECK(g.weights(0, 2) == 0.0);
  CHECK(g.weights(1, 2) == 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.weights(i, i) == 0.0);
  CHECK(g.features(1, 1) == 1.0);

  const FrameGraph empty = build_graph({}, GraphStrategy::threshold(0.1), layer);
  CHECK(empty.empty());

  const FrameGraph single = build_graph({det_at(0.2, 0.2, {1.0, 2.0})},
                                        GraphStrategy::threshold(0.1), layer);
  CHECK(single.n == 1);
  CHECK(single.weights(0, 0) == 0.0);
}

TEST_CASE("build_graph: permutation equivariance is exact") {
  SeededRng rng(23);
  const std::size_t f = 3;
  const FeedForwardLayer layer = FeedForwardLayer::random(1, 2 * f + 8, Activation::sigmoid, rng);
  std::vector<Detection> dets;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> d(f);
    for (auto& v : d) v = rng.uniform(-1.0, 1.0);
    dets.push_back(det_at(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), d));
  }
  const FrameGraph g = build_graph(dets, GraphStrategy::threshold(0.3), layer);

  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  std::vector<Detection> permuted;
  for (std::size_t p : perm) permuted.push_back(dets[p]);
  const FrameGraph pg = build_graph(permuted, GraphStrategy::threshold(0.3), layer);

  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(pg.weights(i, j) == g.weights(perm[i], perm[j]));
      CHECK(pg.binary(i, j) == g.binary(perm[i], perm[j]));
    }
    for (std::size_t c = 0; c < f; ++c) CHECK(pg.features(i, c) == g.features(perm[i], c));
  }
}

TEST_CASE("propagation_matrix: hand cases") {
  FrameGraph isolated;
  isolated.n = 1;
  isolated.features = Matrix(1, 2);
  isolated.weights = Matrix(1, 1);
  isolated.binary = Matrix(1, 1);
  const Matrix a1 = propagation_matrix(isolated);
  CHECK(a1.rows() == 1);
  CHECK(a1(0, 0) == 1.0);

  const Matrix a2 = propagation_matrix(two_node_unit_graph());
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(a2(i, j) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("propagation_matrix: symmetric and nonnegative on random graphs") {
  SeededRng rng(41);
  const FeedForwardLayer layer = FeedForwardLayer::random(1, 2 * 2 + 8, Activation::sigmoid, rng);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Detection> dets;
    const std::size_t n = 2 + rng.uniform_index(6);
    for (std::size_t i = 0; i < n; ++i)
      dets.push_back(det_at(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                            {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}));
    const FrameGraph g = build_graph(dets, GraphStrategy::threshold(0.25), layer);
    const Matrix ahat = propagation_matrix(g);
    CHECK(max_abs_diff(ahat, transposed(ahat)) == 0.0);
    for (double v : ahat.data()) CHECK(v >= 0.0);
  }
}

TEST_CASE("power_sum_target: hand cases") {
  FrameGraph isolated;
  isolated.n = 1;
  isolated.features = Matrix(1, 2);
  isolated.weights = Matrix(1, 1);
  isolated.binary = Matrix(1, 1);
  CHECK(power_sum_target(isolated, 1)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(power_sum_target(isolated, 2)(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  const Matrix t = power_sum_target(two_node_unit_graph(), 1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(t(i, j) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(power_sum_target(two_node_unit_graph(), 0), DataError);
}

TEST_CASE("power_sum_target: symmetric and nonnegative for higher orders") {
  SeededRng rng(47);
  const FeedForwardLayer layer = FeedForwardLayer::random(1, 2 * 2 + 8, Activation::sigmoid, rng);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Detection> dets;
    const std::size_t n = 2 + rng.uniform_index(5);
    for (std::size_t i = 0; i < n; ++i)
      dets.push_back(det_at(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                            {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}));
    const FrameGraph g = build_graph(dets, GraphStrategy::threshold(0.3), layer);
    for (std::size_t l = 1; l <= 3; ++l) {
      const Matrix t = power_sum_target(g, l);
      CHECK(max_abs_diff(t, transposed(t)) <= 1e-12);
      for (double v : t.data()) CHECK(v >= 0.0);
    }
  }
}
