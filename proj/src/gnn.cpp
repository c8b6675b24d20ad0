#include "topotrack/gnn.hpp"

#include <algorithm>
#include <cmath>

#include "topotrack/errors.hpp"
#include "topotrack/kernels.hpp"
#include "topotrack/ops.hpp"

namespace topotrack {

GcnStack GcnStack::random(const std::vector<std::size_t>& dims, bool use_relu, SeededRng& rng) {
  if (dims.size() < 2) throw DataError("gcn: need at least one layer");
  GcnStack stack;
  stack.use_relu = use_relu;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double s = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    stack.weights.push_back(Matrix::random_uniform(dims[l], dims[l + 1], -s, s, rng));
  }
  return stack;
}

std::vector<double> EmbeddingSet::node_vector(std::size_t layer, std::size_t node) const {
  auto r = layers[layer].row(node);
  return {r.begin(), r.end()};
}

namespace {

// Propagation product with the per-entry summands added in value order. The
// summand multiset is invariant under node relabeling, so this makes
// gcn_forward exactly permutation-equivariant (plain accumulation would drift
// by ulps when the summation order changes).
Matrix propagate_stable(const Matrix& ahat, const Matrix& h) {
  const std::size_t n = ahat.rows();
  const std::size_t f = h.cols();
  Matrix out(n, f);
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < f; ++c) {
      for (std::size_t q = 0; q < n; ++q) terms[q] = ahat(i, q) * h(q, c);
      std::sort(terms.begin(), terms.end());
      double sum = 0.0;
      for (double t : terms) sum += t;
      out(i, c) = sum;
    }
  }
  return out;
}

}  // namespace

GcnCache gcn_forward_cache(const GcnStack& stack, const FrameGraph& g) {
  if (g.empty()) throw DimensionError("gcn_forward: empty graph");
  if (stack.layers() == 0) throw DimensionError("gcn_forward: empty stack");
  if (g.feature_dim() != stack.input_dim())
    throw DimensionError("gcn_forward: feature dimension mismatch");

  GcnCache cache;
  cache.ahat = propagation_matrix(g);
  cache.h.push_back(g.features);
  const std::size_t L = stack.layers();
  for (std::size_t l = 0; l < L; ++l) {
    Matrix z = kernels::matmul(propagate_stable(cache.ahat, cache.h.back()), stack.weights[l]);
    cache.pre.push_back(z);
    const bool apply_relu = stack.use_relu && l + 1 < L;  // final layer stays linear
    if (apply_relu) {
      for (double& v : z.data()) v = relu(v);
    }
    cache.h.push_back(std::move(z));
  }
  return cache;
}

EmbeddingSet gcn_forward(const GcnStack& stack, const FrameGraph& g) {
  GcnCache cache = gcn_forward_cache(stack, g);
  EmbeddingSet out;
  out.layers.assign(cache.h.begin() + 1, cache.h.end());
  return out;
}

std::vector<Matrix> gcn_backward(const GcnStack& stack, const GcnCache& cache,
                                 const std::vector<Matrix>& dh) {
  const std::size_t L = stack.layers();
  if (dh.size() != L) throw DimensionError("gcn_backward: gradient count mismatch");
  std::vector<Matrix> dw(L);
  Matrix flowing;  // gradient w.r.t. h[l] arriving from layers above
  for (std::size_t l = L; l-- > 0;) {
    Matrix upstream;
    if (!dh[l].empty()) upstream = dh[l];
    if (!flowing.empty()) {
      if (upstream.empty())
        upstream = flowing;
      else
        upstream += flowing;
    }
    if (upstream.empty()) upstream = Matrix(cache.h[l + 1].rows(), cache.h[l + 1].cols());

    const bool applied_relu = stack.use_relu && l + 1 < L;
    Matrix dz = upstream;
    if (applied_relu) {
      auto d = dz.data();
      auto p = cache.pre[l].data();
      for (std::size_t i = 0; i < d.size(); ++i)
        if (p[i] <= 0.0) d[i] = 0.0;
    }
    const Matrix propagated = propagate_stable(cache.ahat, cache.h[l]);  // n x F_{l-1}
    dw[l] = kernels::matmul(transposed(propagated), dz);
    flowing = kernels::matmul(kernels::matmul(transposed(cache.ahat), dz),
                              transposed(stack.weights[l]));
  }
  return dw;
}

namespace {

Matrix normalize_rows(const Matrix& m, std::vector<double>& norms) {
  Matrix out = m;
  norms.resize(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double n = l2_norm(m.row(i));
    norms[i] = n;
    if (n < 1e-12) {
      for (double& v : out.row(i)) v = 0.0;
    } else {
      for (double& v : out.row(i)) v /= n;
    }
  }
  return out;
}

}  // namespace

LossResult reconstruction_loss(const GcnStack& stack, const FrameGraph& g) {
  GcnCache cache = gcn_forward_cache(stack, g);
  const std::size_t L = stack.layers();

  double loss = 0.0;
  std::vector<Matrix> dh(L);
  for (std::size_t l = 1; l <= L; ++l) {
    const Matrix target = power_sum_target(g, l);
    std::vector<double> norms;
    const Matrix hn = normalize_rows(cache.h[l], norms);
    const Matrix gram = kernels::matmul(hn, transposed(hn));
    const Matrix residual = target - gram;
    const double r = frobenius_norm(residual);
    loss += r;
    if (r < 1e-12) continue;

    // d||R||_F/dGram = -R / ||R||_F; Gram = Hn Hn^T with symmetric upstream,
    // so dHn = 2 * G * Hn.
    Matrix gmat = residual;
    gmat *= -1.0 / r;
    Matrix dhn = kernels::matmul(gmat, hn);
    dhn *= 2.0;

    // back through row normalization: dh = (dhn - (dhn . hn) hn) / norm
    Matrix dlayer(dhn.rows(), dhn.cols());
    for (std::size_t i = 0; i < dhn.rows(); ++i) {
      if (norms[i] < 1e-12) continue;
      const double proj = dot(dhn.row(i), hn.row(i));
      auto src = dhn.row(i);
      auto unit = hn.row(i);
      auto dst = dlayer.row(i);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = (src[j] - proj * unit[j]) / norms[i];
    }
    dh[l - 1] = std::move(dlayer);
  }

  LossResult out;
  out.value = loss;
  out.grads.weights = gcn_backward(stack, cache, dh);
  return out;
}

Augmented augment(const FrameGraph& g, const AugmentConfig& cfg, SeededRng& rng) {
  if (g.empty()) throw DimensionError("augment: empty graph");
  const std::size_t n = g.n;

  // (1) flip edges: each unordered pair toggles with probability p1; a newly
  // created edge gets a uniform weight since no weight model is in scope here
  Matrix weights = g.weights;
  Matrix binary = g.binary;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!rng.bernoulli(cfg.p1)) continue;
      if (binary(i, j) != 0.0) {
        binary(i, j) = binary(j, i) = 0.0;
        weights(i, j) = weights(j, i) = 0.0;
      } else {
        binary(i, j) = binary(j, i) = 1.0;
        const double w = rng.uniform(0.05, 0.95);
        weights(i, j) = weights(j, i) = w;
      }
    }
  }

  // (2) drop nodes, always keeping at least one
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (!rng.bernoulli(cfg.p2)) kept.push_back(i);
  if (kept.empty()) kept.push_back(0);

  Augmented out;
  out.kept = kept;
  FrameGraph& ag = out.graph;
  ag.n = kept.size();
  ag.features = Matrix(ag.n, g.feature_dim());
  ag.weights = Matrix(ag.n, ag.n);
  ag.binary = Matrix(ag.n, ag.n);
  for (std::size_t a = 0; a < kept.size(); ++a) {
    std::copy(g.features.row(kept[a]).begin(), g.features.row(kept[a]).end(),
              ag.features.row(a).begin());
    ag.boxes.push_back(g.boxes.empty() ? BoundingBox{} : g.boxes[kept[a]]);
    for (std::size_t b = 0; b < kept.size(); ++b) {
      ag.weights(a, b) = weights(kept[a], kept[b]);
      ag.binary(a, b) = binary(kept[a], kept[b]);
    }
  }

  // (3) perturb node features and box centers, strength scaled by epsilon
  for (std::size_t a = 0; a < ag.n; ++a) {
    if (!rng.bernoulli(cfg.p3)) continue;
    auto row = ag.features.row(a);
    for (double& v : row) v += cfg.epsilon * (std::abs(v) + 1.0) * rng.normal();
    if (!ag.boxes.empty()) {
      BoundingBox& box = ag.boxes[a];
      box.left += rng.uniform(-cfg.epsilon, cfg.epsilon) * box.frame_w;
      box.top += rng.uniform(-cfg.epsilon, cfg.epsilon) * box.frame_h;
    }
  }
  return out;
}

LossResult adaptivity_loss(const GcnStack& stack, const FrameGraph& g, const FrameGraph& aug,
                           const std::vector<std::size_t>& kept) {
  if (kept.empty()) throw DimensionError("adaptivity_loss: empty correspondence");
  GcnCache cache = gcn_forward_cache(stack, g);
  GcnCache aug_cache = gcn_forward_cache(stack, aug);
  const std::size_t L = stack.layers();

  double loss = 0.0;
  std::vector<Matrix> dh(L), dh_aug(L);
  for (std::size_t l = 0; l < L; ++l) {
    dh[l] = Matrix(cache.h[l + 1].rows(), cache.h[l + 1].cols());
    dh_aug[l] = Matrix(aug_cache.h[l + 1].rows(), aug_cache.h[l + 1].cols());
    for (std::size_t a = 0; a < kept.size(); ++a) {
      const std::size_t i = kept[a];
      auto hi = cache.h[l + 1].row(i);
      auto ha = aug_cache.h[l + 1].row(a);
      double sq = 0.0;
      for (std::size_t j = 0; j < hi.size(); ++j) {
        const double d = hi[j] - ha[j];
        sq += d * d;
      }
      const double dist = std::sqrt(sq);
      const double s = sigmoid(dist);
      loss += s;
      if (dist < 1e-12) continue;
      const double scale = s * (1.0 - s) / dist;
      auto gi = dh[l].row(i);
      auto ga = dh_aug[l].row(a);
      for (std::size_t j = 0; j < hi.size(); ++j) {
        const double d = (hi[j] - ha[j]) * scale;
        gi[j] += d;
        ga[j] -= d;
      }
    }
  }

  LossResult out;
  out.value = loss;
  out.grads.weights = gcn_backward(stack, cache, dh);
  const std::vector<Matrix> aug_grads = gcn_backward(stack, aug_cache, dh_aug);
  for (std::size_t l = 0; l < L; ++l) out.grads.weights[l] += aug_grads[l];
  return out;
}

CombinedLoss combined_loss(const GcnStack& stack, const FrameGraph& g, const AugmentConfig& aug_cfg,
                           const GnnLossConfig& loss_cfg, SeededRng& rng) {
  const double gamma = loss_cfg.gamma;
  if (gamma < 0.0 || gamma > 1.0) throw DataError("combined_loss: gamma must lie in [0,1]");

  LossResult rec = reconstruction_loss(stack, g);
  Augmented aug = augment(g, aug_cfg, rng);
  LossResult ada = adaptivity_loss(stack, g, aug.graph, aug.kept);

  CombinedLoss out;
  out.jr = rec.value;
  out.ja = ada.value;
  out.j2 = gamma * rec.value + (1.0 - gamma) * ada.value;
  out.grads.weights.resize(stack.layers());
  for (std::size_t l = 0; l < stack.layers(); ++l) {
    out.grads.weights[l] = rec.grads.weights[l] * gamma + ada.grads.weights[l] * (1.0 - gamma);
  }
  return out;
}

std::vector<GnnTrainStep> train_gnn(GcnStack& stack, const std::vector<FrameGraph>& graphs,
                                    const AugmentConfig& aug_cfg, const GnnLossConfig& loss_cfg,
                                    AdamOptimizer& optimizer, std::size_t steps, SeededRng& rng) {
  if (graphs.empty()) throw DataError("train_gnn: no graphs");
  for (const auto& g : graphs)
    if (g.empty()) throw DataError("train_gnn: empty graph in training set");

  std::vector<GnnTrainStep> trace;
  trace.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    const FrameGraph& g = graphs[step % graphs.size()];
    CombinedLoss loss = combined_loss(stack, g, aug_cfg, loss_cfg, rng);
    trace.push_back({loss.j2, loss.jr, loss.ja});

    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> grads;
    for (std::size_t l = 0; l < stack.layers(); ++l) {
      params.push_back(stack.weights[l].data());
      grads.push_back(loss.grads.weights[l].data());
    }
    optimizer.step(params, grads);
  }
  return trace;
}

Matrix topo_similarity(const EmbeddingSet& det_embeddings,
                       const std::vector<std::vector<double>>& tracklet_vectors,
                       std::size_t layer) {
  if (layer >= det_embeddings.layer_count())
    throw DimensionError("topo_similarity: layer out of range");
  const Matrix& h = det_embeddings.layers[layer];
  Matrix s(h.rows(), tracklet_vectors.size());
  kernels::for_each_pair(h.rows(), tracklet_vectors.size(), [&](std::size_t i, std::size_t j) {
    s(i, j) = cosine(h.row(i), tracklet_vectors[j]);
  });
  return s;
}

}  // namespace topotrack
