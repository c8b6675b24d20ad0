#pragma once

#include <cstddef>
#include <vector>

#include "topotrack/box.hpp"
#include "topotrack/layer.hpp"
#include "topotrack/matrix.hpp"

namespace topotrack {

/// How intra-frame edges are chosen before weights are attached.
struct GraphStrategy {
  enum class Kind { distance_threshold, k_nearest, fully_connected };
  Kind kind = Kind::distance_threshold;
  double t_box = 0.1;  // distance_threshold: connect when center distance < t_box
  std::size_t k = 3;   // k_nearest: per-node neighbor budget, symmetrized by union

  static GraphStrategy threshold(double t) { return {Kind::distance_threshold, t, 0}; }
  static GraphStrategy knn(std::size_t k) { return {Kind::k_nearest, 0.0, k}; }
  static GraphStrategy full() { return {Kind::fully_connected, 0.0, 0}; }
};

/// Attributed intra-frame graph: node features, weighted symmetric edges and
/// their binary support. n == 0 is the sentinel for "no topology this frame".
struct FrameGraph {
  std::size_t n = 0;
  Matrix features;  // n x F
  Matrix weights;   // n x n, symmetric, zero diagonal, entries in [0,1]
  Matrix binary;    // n x n, 1 where weights > 0
  std::vector<BoundingBox> boxes;

  bool empty() const { return n == 0; }
  std::size_t feature_dim() const { return features.cols(); }
};

/// Binary adjacency for the chosen strategy. Symmetric, zero diagonal.
Matrix build_edges(const std::vector<BoundingBox>& boxes, const GraphStrategy& strategy);

/// Learned scalar weight for one ordered pair: sigmoid layer over
/// [x_i, x_j, box_i, box_j] with boxes in normalized 4-number form.
double edge_weight(const FeedForwardLayer& layer, std::span<const double> xi,
                   std::span<const double> xj, const BoundingBox& bi, const BoundingBox& bj);

/// Full graph assembly. Edge weights are evaluated in both concatenation
/// orders and averaged so the weight matrix is symmetric.
FrameGraph build_graph(const std::vector<Detection>& detections, const GraphStrategy& strategy,
                       const FeedForwardLayer& weight_layer);

/// Normalized propagation matrix D^{-1/2} (E + I) D^{-1/2}, where the degree
/// matrix counts binary edges plus the self-loop.
Matrix propagation_matrix(const FrameGraph& g);

/// Degree-normalized sum of the first l powers of (E + I): the layer-l
/// reconstruction target.
Matrix power_sum_target(const FrameGraph& g, std::size_t l);

}  // namespace topotrack
