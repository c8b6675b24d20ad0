#include "topotrack/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topotrack/errors.hpp"
#include "topotrack/kernels.hpp"

namespace topotrack {

Matrix build_edges(const std::vector<BoundingBox>& boxes, const GraphStrategy& strategy) {
  const std::size_t n = boxes.size();
  Matrix adj(n, n);
  if (n <= 1) return adj;

  switch (strategy.kind) {
    case GraphStrategy::Kind::distance_threshold: {
      if (strategy.t_box <= 0.0) throw DataError("build_edges: t_box must be positive");
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (box_distance(boxes[i], boxes[j]) < strategy.t_box) adj(i, j) = adj(j, i) = 1.0;
      break;
    }
    case GraphStrategy::Kind::k_nearest: {
      if (strategy.k == 0) throw DataError("build_edges: k must be at least 1");
      const std::size_t k = std::min(strategy.k, n - 1);
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        // stable ordering guards against ties producing run-to-run jitter
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return box_distance(boxes[i], boxes[a]) < box_distance(boxes[i], boxes[b]);
        });
        std::size_t taken = 0;
        for (std::size_t idx : order) {
          if (idx == i) continue;
          adj(i, idx) = adj(idx, i) = 1.0;  // union symmetrization
          if (++taken == k) break;
        }
      }
      break;
    }
    case GraphStrategy::Kind::fully_connected: {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) adj(i, j) = 1.0;
      break;
    }
  }
  return adj;
}

double edge_weight(const FeedForwardLayer& layer, std::span<const double> xi,
                   std::span<const double> xj, const BoundingBox& bi, const BoundingBox& bj) {
  const std::size_t f = xi.size();
  if (xj.size() != f) throw DimensionError("edge_weight: descriptor lengths differ");
  if (layer.in_dim() != 2 * f + 8)
    throw DimensionError("edge_weight: layer input dimension must be 2F+8");
  if (layer.out_dim() != 1) throw DimensionError("edge_weight: layer must output a scalar");
  if (layer.activation != Activation::sigmoid)
    throw DataError("edge_weight: weight layer must use a sigmoid output");

  std::vector<double> input;
  input.reserve(2 * f + 8);
  input.insert(input.end(), xi.begin(), xi.end());
  input.insert(input.end(), xj.begin(), xj.end());
  for (double v : bi.normalized4()) input.push_back(v);
  for (double v : bj.normalized4()) input.push_back(v);
  return ff_forward(layer, input)[0];
}

FrameGraph build_graph(const std::vector<Detection>& detections, const GraphStrategy& strategy,
                       const FeedForwardLayer& weight_layer) {
  FrameGraph g;
  g.n = detections.size();
  if (g.n == 0) return g;

  const std::size_t f = detections[0].descriptor.size();
  g.features = Matrix(g.n, f);
  g.boxes.reserve(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (detections[i].descriptor.size() != f)
      throw DimensionError("build_graph: descriptor dimensions differ within frame");
    std::copy(detections[i].descriptor.begin(), detections[i].descriptor.end(),
              g.features.row(i).begin());
    g.boxes.push_back(detections[i].box);
  }

  g.binary = build_edges(g.boxes, strategy);
  g.weights = Matrix(g.n, g.n);
  kernels::for_each_pair(g.n, g.n, [&](std::size_t i, std::size_t j) {
    if (j <= i || g.binary(i, j) == 0.0) return;
    const double wij = edge_weight(weight_layer, g.features.row(i), g.features.row(j),
                                   g.boxes[i], g.boxes[j]);
    const double wji = edge_weight(weight_layer, g.features.row(j), g.features.row(i),
                                   g.boxes[j], g.boxes[i]);
    g.weights(i, j) = 0.5 * (wij + wji);
  });
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j) g.weights(j, i) = g.weights(i, j);
  return g;
}

Matrix propagation_matrix(const FrameGraph& g) {
  if (g.empty()) throw DimensionError("propagation_matrix: empty graph");
  const std::size_t n = g.n;
  std::vector<double> inv_sqrt_deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 1.0;  // self-loop
    for (std::size_t j = 0; j < n; ++j) deg += g.binary(i, j);
    inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
  }
  Matrix ahat(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double e_hat = g.weights(i, j) + (i == j ? 1.0 : 0.0);
      // grouping the degree product keeps the matrix bit-exactly symmetric
      ahat(i, j) = e_hat * (inv_sqrt_deg[i] * inv_sqrt_deg[j]);
    }
  }
  return ahat;
}

Matrix power_sum_target(const FrameGraph& g, std::size_t l) {
  if (g.empty()) throw DimensionError("power_sum_target: empty graph");
  if (l == 0) throw DataError("power_sum_target: l must be at least 1");
  const std::size_t n = g.n;
  Matrix e_hat = g.weights;
  for (std::size_t i = 0; i < n; ++i) e_hat(i, i) += 1.0;

  Matrix power = e_hat;
  Matrix sum = e_hat;
  for (std::size_t k = 2; k <= l; ++k) {
    power = kernels::matmul(power, e_hat);
    sum += power;
  }

  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += sum(i, j);
    if (d <= 0.0) throw NumericError("power_sum_target: nonpositive row sum");
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix target(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) target(i, j) = sum(i, j) * inv_sqrt[i] * inv_sqrt[j];
  return target;
}

}  // namespace topotrack
