#include "topotrack/assoc.hpp"

#include <algorithm>
#include <cmath>

#include "topotrack/errors.hpp"
#include "topotrack/kernels.hpp"
#include "topotrack/ops.hpp"

namespace topotrack {

void FusionWeights::validate() const {
  if (alpha < 0.0) throw DataError("fusion weights: alpha must be nonnegative");
  double sum = alpha;
  for (double b : betas) {
    if (b < 0.0) throw DataError("fusion weights: betas must be nonnegative");
    sum += b;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("fusion weights: alpha + sum(betas) must equal 1, got " +
                    std::to_string(sum));
}

Matrix fuse(const SimilarityBundle& bundle, const FusionWeights& weights) {
  weights.validate();
  const Matrix& sa = bundle.appearance;
  const Matrix& sm = bundle.motion;
  if (!sa.same_shape(sm)) throw DimensionError("fuse: appearance/motion shape mismatch");
  const std::size_t layers = bundle.topology.size();
  if (layers != 0 && layers != weights.layer_count())
    throw DimensionError("fuse: topology layer count does not match beta count");
  if (bundle.topo_valid.size() != layers)
    throw DimensionError("fuse: topology validity masks missing");
  for (std::size_t l = 0; l < layers; ++l)
    if (!bundle.topology[l].same_shape(sa) || !bundle.topo_valid[l].same_shape(sa))
      throw DimensionError("fuse: topology shape mismatch");

  Matrix fused(sa.rows(), sa.cols());
  for (std::size_t i = 0; i < sa.rows(); ++i) {
    for (std::size_t j = 0; j < sa.cols(); ++j) {
      double alpha_eff = weights.alpha;
      double topo_term = 0.0;
      for (std::size_t l = 0; l < weights.layer_count(); ++l) {
        if (l < layers && bundle.topo_valid[l](i, j) != 0.0) {
          topo_term += weights.betas[l] * bundle.topology[l](i, j);
        } else {
          alpha_eff += weights.betas[l];  // fold unavailable mass back
        }
      }
      fused(i, j) = alpha_eff * std::min(sa(i, j), sm(i, j)) + topo_term;
    }
  }
  return fused;
}

namespace {

Observation make_observation(const Detection& det, const EmbeddingSet* embeddings,
                             std::size_t node, std::size_t layer_count) {
  Observation obs;
  obs.box = det.box;
  obs.descriptor = det.descriptor;
  if (embeddings) {
    obs.embeddings.reserve(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l)
      obs.embeddings.push_back(embeddings->node_vector(l, node));
  }
  return obs;
}

}  // namespace

AveragedScores averaged_scores(const Tracklet& tracklet, const Detection& detection,
                               const AppearanceMatcher& matcher,
                               const std::vector<std::vector<double>>& det_embeddings,
                               std::size_t layer_count) {
  if (tracklet.memory.empty()) throw DataError("averaged_scores: tracklet has no observations");
  AveragedScores out;
  out.topology.assign(layer_count, 0.0);
  out.topo_valid.assign(layer_count, 0);

  double sum = 0.0;
  for (const Observation& obs : tracklet.memory)
    sum += matcher.score(detection.descriptor, obs.descriptor);
  out.appearance_raw = sum / static_cast<double>(tracklet.memory.size());

  for (std::size_t l = 0; l < layer_count && l < det_embeddings.size(); ++l) {
    if (det_embeddings[l].empty()) continue;
    double topo_sum = 0.0;
    std::size_t count = 0;
    for (const Observation& obs : tracklet.memory) {
      if (l >= obs.embeddings.size() || obs.embeddings[l].empty()) continue;
      topo_sum += cosine(det_embeddings[l], obs.embeddings[l]);
      ++count;
    }
    if (count > 0) {
      out.topology[l] = topo_sum / static_cast<double>(count);
      out.topo_valid[l] = 1;
    }
  }
  return out;
}

AssociationResult track_step(TrackerState& state, const std::vector<Detection>& detections,
                             std::size_t frame, const TrackerModels& models,
                             const TrackerConfig& config, StepDebug* debug) {
  config.fusion.validate();
  std::size_t delta = 1;
  if (state.last_frame) {
    if (frame <= *state.last_frame)
      throw DataError("track_step: frame indices must be strictly increasing");
    delta = frame - *state.last_frame;
  }

  const std::size_t n = detections.size();
  const std::size_t m = state.tracklets.size();
  const std::size_t layer_count = config.fusion.layer_count();

  // topology branch: needs at least two nodes to say anything
  FrameGraph graph;
  EmbeddingSet det_embeddings;
  bool has_topology = false;
  if (n >= 2 && models.gnn.layers() > 0) {
    graph = build_graph(detections, config.strategy, models.edge_layer);
    det_embeddings = gcn_forward(models.gnn, graph);
    if (det_embeddings.layer_count() < layer_count)
      throw DataError("track_step: fusion expects more GCN layers than the stack provides");
    has_topology = true;
  }

  AssociationResult result;
  std::vector<bool> det_matched(n, false);
  std::vector<std::ptrdiff_t> det_to_trk(n, -1);
  MotionPairOutputs motion;

  if (n > 0 && m > 0) {
    // per-detection embedding vectors, reused across all tracklet pairings
    std::vector<std::vector<std::vector<double>>> det_embs(n);
    if (has_topology) {
      for (std::size_t i = 0; i < n; ++i) {
        det_embs[i].reserve(layer_count);
        for (std::size_t l = 0; l < layer_count; ++l)
          det_embs[i].push_back(det_embeddings.node_vector(l, i));
      }
    }

    Matrix app_raw(n, m);
    SimilarityBundle bundle;
    if (has_topology) {
      bundle.topology.assign(layer_count, Matrix(n, m));
      bundle.topo_valid.assign(layer_count, Matrix(n, m));
    }
    kernels::for_each_pair(n, m, [&](std::size_t i, std::size_t j) {
      const AveragedScores scores = averaged_scores(state.tracklets[j], detections[i],
                                                    models.matcher, det_embs[i], layer_count);
      app_raw(i, j) = scores.appearance_raw;
      for (std::size_t l = 0; l < bundle.topology.size(); ++l) {
        bundle.topology[l](i, j) = scores.topology[l];
        bundle.topo_valid[l](i, j) = scores.topo_valid[l] ? 1.0 : 0.0;
      }
    });

    std::vector<BoundingBox> det_boxes, trk_boxes;
    det_boxes.reserve(n);
    trk_boxes.reserve(m);
    for (const auto& d : detections) det_boxes.push_back(d.box);
    std::vector<std::vector<double>> trk_hidden;
    trk_hidden.reserve(m);
    for (const auto& t : state.tracklets) {
      trk_boxes.push_back(t.last().box);
      trk_hidden.push_back(t.hidden);
    }
    motion = motion_scores(models.scorer, det_boxes, trk_boxes, trk_hidden);

    bundle.appearance = min_softmax(app_raw);
    bundle.motion = motion.scores.norm;

    const Matrix fused = fuse(bundle, config.fusion);
    if (!fused.all_finite()) throw NumericError("track_step: non-finite fused affinity");
    if (debug) {
      debug->fused = fused;
      debug->tracklet_ids.clear();
      for (const auto& t : state.tracklets) debug->tracklet_ids.push_back(t.id);
    }

    const AssignmentResult assignment = greedy_match(fused, config.tau_match);
    for (const auto& match : assignment.matches) {
      Tracklet& trk = state.tracklets[match.col];
      const Detection& det = detections[match.row];
      trk.hidden = motion.states[match.row][match.col];
      trk.memory.push_back(make_observation(det, has_topology ? &det_embeddings : nullptr,
                                            match.row, layer_count));
      while (trk.memory.size() > config.memory) trk.memory.pop_front();
      trk.frames_since_seen = 0;
      trk.history.emplace_back(frame, det.box);
      det_matched[match.row] = true;
      det_to_trk[match.row] = static_cast<std::ptrdiff_t>(match.col);
      result.matches.push_back({match.row, trk.id, match.score});
    }
  } else if (debug) {
    debug->fused = Matrix();
    debug->tracklet_ids.clear();
    for (const auto& t : state.tracklets) debug->tracklet_ids.push_back(t.id);
  }

  // age unmatched tracklets; report before retiring
  std::vector<bool> trk_matched(m, false);
  for (std::size_t i = 0; i < n; ++i)
    if (det_to_trk[i] >= 0) trk_matched[static_cast<std::size_t>(det_to_trk[i])] = true;
  for (std::size_t j = 0; j < m; ++j) {
    if (!trk_matched[j]) {
      state.tracklets[j].frames_since_seen += delta;
      result.unmatched_tracklets.push_back(state.tracklets[j].id);
    }
  }

  // spawn from confident unmatched detections
  for (std::size_t i = 0; i < n; ++i) {
    if (det_matched[i]) continue;
    result.unmatched_detections.push_back(i);
    const Detection& det = detections[i];
    if (det.confidence < config.tau_det) continue;
    Tracklet trk;
    trk.id = state.next_id++;
    trk.hidden.assign(models.scorer.hidden_dim(), 0.0);
    trk.memory.push_back(
        make_observation(det, has_topology ? &det_embeddings : nullptr, i, layer_count));
    trk.history.emplace_back(frame, det.box);
    state.tracklets.push_back(std::move(trk));
  }

  std::erase_if(state.tracklets,
                [&](const Tracklet& t) { return t.frames_since_seen > config.max_age; });
  state.last_frame = frame;
  return result;
}

std::vector<TrackRecord> track_sequence(
    const std::map<std::size_t, std::vector<Detection>>& frames, const TrackerModels& models,
    const TrackerConfig& config) {
  std::vector<TrackRecord> records;
  if (frames.empty()) return records;
  TrackerState state;
  const std::size_t first = frames.begin()->first;
  const std::size_t last = frames.rbegin()->first;
  static const std::vector<Detection> kEmpty;
  for (std::size_t frame = first; frame <= last; ++frame) {
    auto it = frames.find(frame);
    const std::vector<Detection>& dets = it == frames.end() ? kEmpty : it->second;
    track_step(state, dets, frame, models, config);
    for (const Tracklet& trk : state.tracklets) {
      if (!trk.history.empty() && trk.history.back().first == frame)
        records.push_back({frame, trk.id, trk.history.back().second});
    }
  }
  return records;
}

}  // namespace topotrack
