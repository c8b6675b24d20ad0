#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "topotrack/assign.hpp"
#include "topotrack/box.hpp"
#include "topotrack/gnn.hpp"
#include "topotrack/graph.hpp"
#include "topotrack/providers.hpp"

namespace topotrack {

/// Convex weights for the affinity fusion: alpha on min(appearance, motion)
/// and one beta per GCN layer. Must sum to 1.
struct FusionWeights {
  double alpha = 0.7;
  std::vector<double> betas = {0.2, 0.1};

  std::size_t layer_count() const { return betas.size(); }
  void validate() const;
};

/// The per-frame similarity families, shaped n x m. Topology layers may be
/// absent (empty vector) or partially valid per pair; invalid entries have
/// their beta mass folded back into alpha so weights still sum to 1.
struct SimilarityBundle {
  Matrix appearance;              // normalized
  Matrix motion;                  // normalized
  std::vector<Matrix> topology;   // cosine per layer
  std::vector<Matrix> topo_valid; // 0/1 masks matching `topology`
};

Matrix fuse(const SimilarityBundle& bundle, const FusionWeights& weights);

/// One stored snapshot of a tracklet: what the scoring families need.
struct Observation {
  BoundingBox box;
  std::vector<double> descriptor;
  std::vector<std::vector<double>> embeddings;  // per GCN layer; empty if none
};

struct Tracklet {
  int id = 0;
  std::vector<double> hidden;        // motion state, zero at birth
  std::deque<Observation> memory;    // newest at the back, capped
  std::size_t frames_since_seen = 0;
  std::vector<std::pair<std::size_t, BoundingBox>> history;  // (frame, box)

  const Observation& last() const { return memory.back(); }
};

struct TrackerConfig {
  FusionWeights fusion;
  GraphStrategy strategy;
  double tau_match = 0.05;  // minimum fused score to accept a pairing
  double tau_det = 0.4;     // minimum confidence to spawn a tracklet
  std::size_t max_age = 30; // unmatched frames before retirement
  std::size_t memory = 6;   // stored observations: current + 5 past
};

struct TrackerModels {
  FeedForwardLayer edge_layer;
  GcnStack gnn;
  AppearanceMatcher matcher;
  MotionScorer scorer;
};

struct TrackerState {
  std::vector<Tracklet> tracklets;
  int next_id = 1;
  std::optional<std::size_t> last_frame;
};

struct AssociationMatch {
  std::size_t detection = 0;
  int tracklet_id = 0;
  double score = 0.0;
};

struct AssociationResult {
  std::vector<AssociationMatch> matches;
  std::vector<std::size_t> unmatched_detections;
  std::vector<int> unmatched_tracklets;
};

/// Appearance and topology scores for one (detection, tracklet) pair,
/// averaged over the tracklet's stored observations. Motion is excluded: it
/// uses the live hidden state only.
struct AveragedScores {
  double appearance_raw = 0.0;
  std::vector<double> topology;        // per layer, cosine means
  std::vector<unsigned char> topo_valid;  // per layer, 0 when no stored embedding
};

/// det_embeddings holds the detection's per-layer embedding vectors; pass an
/// empty list when the topology branch is off this frame.
AveragedScores averaged_scores(const Tracklet& tracklet, const Detection& detection,
                               const AppearanceMatcher& matcher,
                               const std::vector<std::vector<double>>& det_embeddings,
                               std::size_t layer_count);

/// Per-frame diagnostic capture for the plot exporter.
struct StepDebug {
  Matrix fused;                  // n x m before matching
  std::vector<int> tracklet_ids; // column order of `fused`
};

/// One tracking step: build the intra-frame graph, score the three families
/// (appearance and topology averaged over stored observations), fuse, match
/// greedily, then update tracklet state and lifecycle.
AssociationResult track_step(TrackerState& state, const std::vector<Detection>& detections,
                             std::size_t frame, const TrackerModels& models,
                             const TrackerConfig& config, StepDebug* debug = nullptr);

struct TrackRecord {
  std::size_t frame = 0;
  int id = 0;
  BoundingBox box;
};

/// Batch driver over track_step across a contiguous frame range; frames
/// absent from the map are processed as empty.
std::vector<TrackRecord> track_sequence(const std::map<std::size_t, std::vector<Detection>>& frames,
                                        const TrackerModels& models, const TrackerConfig& config);

}  // namespace topotrack
