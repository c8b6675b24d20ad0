#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "topotrack/adam.hpp"
#include "topotrack/box.hpp"
#include "topotrack/layer.hpp"
#include "topotrack/matrix.hpp"
#include "topotrack/rng.hpp"

namespace topotrack {

/// Raw pairwise scores plus, after normalize(), their min-softmax form.
struct ScoreMatrix {
  Matrix raw;
  Matrix norm;
  bool normalized = false;

  std::size_t rows() const { return normalized ? norm.rows() : raw.rows(); }
  std::size_t cols() const { return normalized ? norm.cols() : raw.cols(); }
  bool empty() const { return rows() == 0 || cols() == 0; }
};

/// Elementwise min of column-wise and row-wise softmax. Entries land in
/// (0, 1] and every row and column sums to at most 1.
Matrix min_softmax(const Matrix& raw);

/// Fills `norm` from `raw`.
ScoreMatrix normalize(ScoreMatrix s);

/// Two-layer matcher over concatenated descriptor pairs.
struct AppearanceMatcher {
  FeedForwardLayer hidden;  // 2F -> H, relu
  FeedForwardLayer output;  // H -> 1, identity

  std::size_t descriptor_dim() const { return hidden.in_dim() / 2; }
  double score(std::span<const double> a, std::span<const double> b) const;

  static AppearanceMatcher random(std::size_t descriptor_dim, std::size_t hidden_dim,
                                  SeededRng& rng);
};

/// Normalized appearance scores for every (detection, tracklet) descriptor
/// pair. Returns an empty sentinel when either side is empty.
ScoreMatrix appearance_scores(const AppearanceMatcher& matcher,
                              const std::vector<std::vector<double>>& det_descriptors,
                              const std::vector<std::vector<double>>& trk_descriptors);

/// Recurrent box-pair scorer: one sigmoid cell over [det box, trk box, h]
/// with a linear score head and a sigmoid state head.
struct MotionScorer {
  FeedForwardLayer cell;        // (8 + H) -> H, sigmoid
  FeedForwardLayer score_head;  // H -> 1, identity
  FeedForwardLayer state_head;  // H -> H, sigmoid

  std::size_t hidden_dim() const { return state_head.out_dim(); }

  static MotionScorer random(std::size_t hidden_dim, SeededRng& rng);
};

struct MotionPairOutputs {
  ScoreMatrix scores;                                    // normalized, n x m
  std::vector<std::vector<std::vector<double>>> states;  // [det][trk] candidate hidden
};

/// Scores plus per-pair candidate hidden states; the tracker keeps the state
/// of whichever pairing wins the assignment.
MotionPairOutputs motion_scores(const MotionScorer& scorer,
                                const std::vector<BoundingBox>& det_boxes,
                                const std::vector<BoundingBox>& trk_boxes,
                                const std::vector<std::vector<double>>& trk_hidden);

/// Max-speed reachability gate: 1 where the normalized center distance is
/// within v_max * frame_gap.
Matrix feasibility_mask(const std::vector<BoundingBox>& boxes_a,
                        const std::vector<BoundingBox>& boxes_b, double v_max,
                        std::size_t frame_gap);

struct ConsistencyLoss {
  double value = 0.0;
  Matrix d_norm1, d_norm2;  // gradients w.r.t. the normalized matrices
  Matrix d_raw1, d_raw2;    // chained through min-softmax when raws are present
  std::vector<std::size_t> clamped_rows;  // rows whose masked mass hit the clamp
};

/// J1 = -sum_i log sum_j o1 o2 c over normalized inputs, inner sums clamped
/// at 1e-12.
ConsistencyLoss consistency_loss(const ScoreMatrix& o1, const ScoreMatrix& o2,
                                 const Matrix& mask);

struct ProviderTrainOptions {
  std::size_t window = 8;  // frames per training sample
  double v_max = 0.02;     // per-frame normalized speed bound for the mask
};

/// Unsupervised cross-cue training: appearance scores the (first, last)
/// frames of a sampled window while the motion scorer is rolled across the
/// window with greedy self-matching; J1 ties the two outputs together.
std::vector<double> train_providers(AppearanceMatcher& matcher, MotionScorer& scorer,
                                    const std::vector<Sequence>& sequences,
                                    const ProviderTrainOptions& options,
                                    AdamOptimizer& optimizer, std::size_t steps, SeededRng& rng);

}  // namespace topotrack
