#pragma once

#include <cstddef>
#include <vector>

#include "topotrack/adam.hpp"
#include "topotrack/graph.hpp"
#include "topotrack/matrix.hpp"
#include "topotrack/rng.hpp"

namespace topotrack {

/// L-layer graph convolution stack. Layer l maps F_{l-1} -> F_l features
/// through the shared propagation matrix; relu between layers is optional and
/// the final layer output is always linear.
struct GcnStack {
  std::vector<Matrix> weights;  // W^l: F_{l-1} x F_l
  bool use_relu = false;

  std::size_t layers() const { return weights.size(); }
  std::size_t input_dim() const { return weights.empty() ? 0 : weights.front().rows(); }
  std::size_t layer_dim(std::size_t l) const { return weights[l].cols(); }

  /// dims = {F_0, F_1, ..., F_L}; requires at least one layer.
  static GcnStack random(const std::vector<std::size_t>& dims, bool use_relu, SeededRng& rng);
};

/// Per-layer node embeddings H^(1..L); row order matches the graph's nodes.
struct EmbeddingSet {
  std::vector<Matrix> layers;

  std::size_t layer_count() const { return layers.size(); }
  std::vector<double> node_vector(std::size_t layer, std::size_t node) const;
};

EmbeddingSet gcn_forward(const GcnStack& stack, const FrameGraph& g);

/// Forward pass with the intermediates the backward pass needs.
struct GcnCache {
  Matrix ahat;
  std::vector<Matrix> h;    // h[0] = X, h[l] = post-activation layer output
  std::vector<Matrix> pre;  // pre[l-1] = pre-activation of layer l
};
GcnCache gcn_forward_cache(const GcnStack& stack, const FrameGraph& g);

/// Accumulate dLoss/dW for upstream gradients dh[l-1] w.r.t. each layer
/// output. Entries of dh may be empty matrices (no direct contribution).
std::vector<Matrix> gcn_backward(const GcnStack& stack, const GcnCache& cache,
                                 const std::vector<Matrix>& dh);

struct AugmentConfig {
  double p1 = 0.1;       // per-pair edge flip probability
  double p2 = 0.1;       // per-node removal probability
  double p3 = 0.1;       // per-node feature perturbation probability
  double epsilon = 0.01; // augmentation strength
};

struct GnnLossConfig {
  double gamma = 0.8;  // weight on the reconstruction term
};

struct GnnGradients {
  std::vector<Matrix> weights;
};

struct LossResult {
  double value = 0.0;
  GnnGradients grads;
};

/// Sum over layers of || target_l - Hn^(l) (Hn^(l))^T ||_F with row-normalized
/// embeddings, plus analytic parameter gradients.
LossResult reconstruction_loss(const GcnStack& stack, const FrameGraph& g);

/// Randomly perturbed copy of a graph plus the surviving-node correspondence.
/// kept[new_index] = original_index.
struct Augmented {
  FrameGraph graph;
  std::vector<std::size_t> kept;
};
Augmented augment(const FrameGraph& g, const AugmentConfig& cfg, SeededRng& rng);

/// Sum over matched node pairs and layers of sigmoid(|| h - h_aug ||).
LossResult adaptivity_loss(const GcnStack& stack, const FrameGraph& g, const FrameGraph& aug,
                           const std::vector<std::size_t>& kept);

struct CombinedLoss {
  double j2 = 0.0;
  double jr = 0.0;
  double ja = 0.0;
  GnnGradients grads;
};

/// gamma * reconstruction + (1 - gamma) * adaptivity on a fresh augmentation.
CombinedLoss combined_loss(const GcnStack& stack, const FrameGraph& g, const AugmentConfig& aug_cfg,
                           const GnnLossConfig& loss_cfg, SeededRng& rng);

struct GnnTrainStep {
  double j2 = 0.0;
  double jr = 0.0;
  double ja = 0.0;
};

/// Round-robin over the graphs, one combined-loss step each. Returns the
/// per-step losses evaluated at the parameters before that step's update.
std::vector<GnnTrainStep> train_gnn(GcnStack& stack, const std::vector<FrameGraph>& graphs,
                                    const AugmentConfig& aug_cfg, const GnnLossConfig& loss_cfg,
                                    AdamOptimizer& optimizer, std::size_t steps, SeededRng& rng);

/// Cosine similarity between detection embeddings at one layer (rows) and
/// stored per-tracklet vectors (columns).
Matrix topo_similarity(const EmbeddingSet& det_embeddings,
                       const std::vector<std::vector<double>>& tracklet_vectors,
                       std::size_t layer);

}  // namespace topotrack
