#include "topotrack/providers.hpp"

#include <algorithm>
#include <cmath>

#include "topotrack/assign.hpp"
#include "topotrack/errors.hpp"
#include "topotrack/kernels.hpp"
#include "topotrack/ops.hpp"

namespace topotrack {

Matrix min_softmax(const Matrix& raw) {
  if (raw.empty()) throw DimensionError("min_softmax: empty matrix");
  return elementwise_min(softmax_cols(raw), softmax_rows(raw));
}

ScoreMatrix normalize(ScoreMatrix s) {
  s.norm = min_softmax(s.raw);
  s.normalized = true;
  return s;
}

AppearanceMatcher AppearanceMatcher::random(std::size_t descriptor_dim, std::size_t hidden_dim,
                                            SeededRng& rng) {
  AppearanceMatcher m;
  m.hidden = FeedForwardLayer::random(hidden_dim, 2 * descriptor_dim, Activation::relu, rng);
  m.output = FeedForwardLayer::random(1, hidden_dim, Activation::identity, rng);
  return m;
}

double AppearanceMatcher::score(std::span<const double> a, std::span<const double> b) const {
  std::vector<double> input;
  input.reserve(a.size() + b.size());
  input.insert(input.end(), a.begin(), a.end());
  input.insert(input.end(), b.begin(), b.end());
  return ff_forward(output, ff_forward(hidden, input))[0];
}

ScoreMatrix appearance_scores(const AppearanceMatcher& matcher,
                              const std::vector<std::vector<double>>& det_descriptors,
                              const std::vector<std::vector<double>>& trk_descriptors) {
  ScoreMatrix s;
  const std::size_t n = det_descriptors.size();
  const std::size_t m = trk_descriptors.size();
  if (n == 0 || m == 0) return s;  // empty sentinel
  s.raw = Matrix(n, m);
  kernels::for_each_pair(n, m, [&](std::size_t i, std::size_t j) {
    s.raw(i, j) = matcher.score(det_descriptors[i], trk_descriptors[j]);
  });
  return normalize(std::move(s));
}

MotionScorer MotionScorer::random(std::size_t hidden_dim, SeededRng& rng) {
  MotionScorer s;
  s.cell = FeedForwardLayer::random(hidden_dim, 8 + hidden_dim, Activation::sigmoid, rng);
  s.score_head = FeedForwardLayer::random(1, hidden_dim, Activation::identity, rng);
  s.state_head = FeedForwardLayer::random(hidden_dim, hidden_dim, Activation::sigmoid, rng);
  return s;
}

namespace {

std::vector<double> motion_input(const BoundingBox& det, const BoundingBox& trk,
                                 std::span<const double> hidden) {
  std::vector<double> input;
  input.reserve(8 + hidden.size());
  for (double v : det.normalized4()) input.push_back(v);
  for (double v : trk.normalized4()) input.push_back(v);
  input.insert(input.end(), hidden.begin(), hidden.end());
  return input;
}

}  // namespace

MotionPairOutputs motion_scores(const MotionScorer& scorer,
                                const std::vector<BoundingBox>& det_boxes,
                                const std::vector<BoundingBox>& trk_boxes,
                                const std::vector<std::vector<double>>& trk_hidden) {
  if (trk_boxes.size() != trk_hidden.size())
    throw DimensionError("motion_scores: tracklet box/state count mismatch");
  MotionPairOutputs out;
  const std::size_t n = det_boxes.size();
  const std::size_t m = trk_boxes.size();
  if (n == 0 || m == 0) return out;  // empty sentinel
  for (const auto& h : trk_hidden)
    if (h.size() != scorer.hidden_dim())
      throw DimensionError("motion_scores: hidden state length mismatch");

  out.scores.raw = Matrix(n, m);
  out.states.assign(n, std::vector<std::vector<double>>(m));
  kernels::for_each_pair(n, m, [&](std::size_t i, std::size_t j) {
    const std::vector<double> input = motion_input(det_boxes[i], trk_boxes[j], trk_hidden[j]);
    const std::vector<double> z = ff_forward(scorer.cell, input);
    out.scores.raw(i, j) = ff_forward(scorer.score_head, z)[0];
    out.states[i][j] = ff_forward(scorer.state_head, z);
  });
  out.scores = normalize(std::move(out.scores));
  return out;
}

Matrix feasibility_mask(const std::vector<BoundingBox>& boxes_a,
                        const std::vector<BoundingBox>& boxes_b, double v_max,
                        std::size_t frame_gap) {
  if (v_max <= 0.0) throw DataError("feasibility_mask: v_max must be positive");
  if (frame_gap == 0) throw DataError("feasibility_mask: frame gap must be at least 1");
  Matrix mask(boxes_a.size(), boxes_b.size());
  const double reach = v_max * static_cast<double>(frame_gap);
  for (std::size_t i = 0; i < boxes_a.size(); ++i)
    for (std::size_t j = 0; j < boxes_b.size(); ++j)
      mask(i, j) = box_distance(boxes_a[i], boxes_b[j]) <= reach ? 1.0 : 0.0;
  return mask;
}

namespace {

// Gradient of min(softmax_cols, softmax_rows) w.r.t. the raw matrix, given
// the upstream gradient on the normalized output. Ties route through the
// row-softmax branch.
Matrix min_softmax_backward(const Matrix& raw, const Matrix& upstream) {
  const Matrix rows = softmax_rows(raw);
  const Matrix cols = softmax_cols(raw);

  Matrix d_rows(raw.rows(), raw.cols());
  Matrix d_cols(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i)
    for (std::size_t j = 0; j < raw.cols(); ++j) {
      if (rows(i, j) <= cols(i, j))
        d_rows(i, j) = upstream(i, j);
      else
        d_cols(i, j) = upstream(i, j);
    }

  Matrix dx(raw.rows(), raw.cols());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const double proj = dot(d_rows.row(i), rows.row(i));
    for (std::size_t j = 0; j < raw.cols(); ++j)
      dx(i, j) += rows(i, j) * (d_rows(i, j) - proj);
  }
  for (std::size_t j = 0; j < raw.cols(); ++j) {
    double proj = 0.0;
    for (std::size_t i = 0; i < raw.rows(); ++i) proj += d_cols(i, j) * cols(i, j);
    for (std::size_t i = 0; i < raw.rows(); ++i)
      dx(i, j) += cols(i, j) * (d_cols(i, j) - proj);
  }
  return dx;
}

}  // namespace

ConsistencyLoss consistency_loss(const ScoreMatrix& o1, const ScoreMatrix& o2,
                                 const Matrix& mask) {
  if (!o1.normalized || !o2.normalized)
    throw DataError("consistency_loss: inputs must be normalized");
  const Matrix& a = o1.norm;
  const Matrix& b = o2.norm;
  if (!a.same_shape(b) || !a.same_shape(mask))
    throw DimensionError("consistency_loss: shape mismatch");

  ConsistencyLoss out;
  out.d_norm1 = Matrix(a.rows(), a.cols());
  out.d_norm2 = Matrix(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) inner += a(i, j) * b(i, j) * mask(i, j);
    const bool clamped = inner < 1e-12;
    if (clamped) out.clamped_rows.push_back(i);
    const double safe = std::max(inner, 1e-12);
    out.value -= std::log(safe);
    if (clamped) continue;  // flat region of the clamp
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double c = mask(i, j);
      if (c == 0.0) continue;
      out.d_norm1(i, j) = -b(i, j) * c / safe;
      out.d_norm2(i, j) = -a(i, j) * c / safe;
    }
  }
  if (!o1.raw.empty()) out.d_raw1 = min_softmax_backward(o1.raw, out.d_norm1);
  if (!o2.raw.empty()) out.d_raw2 = min_softmax_backward(o2.raw, out.d_norm2);
  return out;
}

namespace {

struct MatcherGradients {
  FfGradients hidden;
  FfGradients output;
};

void matcher_backward(const AppearanceMatcher& matcher, std::span<const double> a,
                      std::span<const double> b, double upstream, MatcherGradients& acc) {
  std::vector<double> input;
  input.reserve(a.size() + b.size());
  input.insert(input.end(), a.begin(), a.end());
  input.insert(input.end(), b.begin(), b.end());
  const std::vector<double> h = ff_forward(matcher.hidden, input);
  const double up[1] = {upstream};
  std::vector<double> dh;
  ff_backward_accumulate(matcher.output, h, up, acc.output, &dh);
  ff_backward_accumulate(matcher.hidden, input, dh, acc.hidden);
}

struct ScorerGradients {
  FfGradients cell;
  FfGradients score_head;
};

// Backward through the final-step score path only; the rolled hidden state is
// treated as a constant input (the state head stays a fixed recurrent map).
void scorer_backward(const MotionScorer& scorer, const BoundingBox& det, const BoundingBox& trk,
                     std::span<const double> hidden, double upstream, ScorerGradients& acc) {
  const std::vector<double> input = motion_input(det, trk, hidden);
  const std::vector<double> z = ff_forward(scorer.cell, input);
  const double up[1] = {upstream};
  std::vector<double> dz;
  ff_backward_accumulate(scorer.score_head, z, up, acc.score_head, &dz);
  ff_backward_accumulate(scorer.cell, input, dz, acc.cell);
}

}  // namespace

std::vector<double> train_providers(AppearanceMatcher& matcher, MotionScorer& scorer,
                                    const std::vector<Sequence>& sequences,
                                    const ProviderTrainOptions& options,
                                    AdamOptimizer& optimizer, std::size_t steps, SeededRng& rng) {
  if (sequences.empty()) throw DataError("train_providers: no sequences");
  const std::size_t window = options.window;
  if (window < 2) throw DataError("train_providers: window must span at least 2 frames");
  for (const auto& seq : sequences)
    if (seq.size() < window) throw DataError("train_providers: window longer than sequence");

  const std::size_t hidden_dim = scorer.hidden_dim();
  std::vector<double> trace;
  trace.reserve(steps);

  for (std::size_t step = 0; step < steps; ++step) {
    const Sequence& seq = sequences[sequences.size() == 1 ? 0 : rng.uniform_index(sequences.size())];
    const std::size_t span = seq.size() - window + 1;
    std::size_t start = rng.uniform_index(span);
    // deterministic scan for a window with populated endpoints
    std::size_t tries = 0;
    while ((seq[start].empty() || seq[start + window - 1].empty()) && tries < span) {
      start = (start + 1) % span;
      ++tries;
    }
    if (seq[start].empty() || seq[start + window - 1].empty())
      throw DataError("train_providers: no window with populated endpoint frames");

    const FrameDetections& first = seq[start];
    const FrameDetections& last = seq[start + window - 1];
    const std::size_t n = first.size();
    const std::size_t m = last.size();

    // appearance across the window endpoints
    ScoreMatrix o1;
    o1.raw = Matrix(n, m);
    kernels::for_each_pair(n, m, [&](std::size_t i, std::size_t j) {
      o1.raw(i, j) = matcher.score(first[i].descriptor, last[j].descriptor);
    });
    o1 = normalize(std::move(o1));

    // roll the motion branch: first-frame objects act as tracklets, matched
    // greedily on motion scores alone through the interior frames
    std::vector<BoundingBox> trk_boxes;
    std::vector<std::vector<double>> trk_hidden(n, std::vector<double>(hidden_dim, 0.0));
    trk_boxes.reserve(n);
    for (const auto& d : first) trk_boxes.push_back(d.box);

    for (std::size_t t = start + 1; t + 1 < start + window; ++t) {
      const FrameDetections& dets = seq[t];
      if (dets.empty()) continue;
      std::vector<BoundingBox> det_boxes;
      det_boxes.reserve(dets.size());
      for (const auto& d : dets) det_boxes.push_back(d.box);
      MotionPairOutputs mo = motion_scores(scorer, det_boxes, trk_boxes, trk_hidden);
      const AssignmentResult assignment = greedy_match(mo.scores.norm, 0.0);
      for (const auto& match : assignment.matches) {
        trk_boxes[match.col] = det_boxes[match.row];
        trk_hidden[match.col] = mo.states[match.row][match.col];
      }
    }

    std::vector<BoundingBox> last_boxes;
    last_boxes.reserve(m);
    for (const auto& d : last) last_boxes.push_back(d.box);
    MotionPairOutputs final_step = motion_scores(scorer, last_boxes, trk_boxes, trk_hidden);

    ScoreMatrix o2;
    o2.raw = transposed(final_step.scores.raw);  // orient as first x last
    o2 = normalize(std::move(o2));

    std::vector<BoundingBox> first_boxes;
    first_boxes.reserve(n);
    for (const auto& d : first) first_boxes.push_back(d.box);
    const Matrix mask = feasibility_mask(first_boxes, last_boxes, options.v_max, window - 1);

    const ConsistencyLoss loss = consistency_loss(o1, o2, mask);
    trace.push_back(loss.value);

    auto zero_grads = [](const FeedForwardLayer& layer) {
      FfGradients g;
      g.weight = Matrix(layer.out_dim(), layer.in_dim());
      g.bias.assign(layer.out_dim(), 0.0);
      return g;
    };
    MatcherGradients mg{zero_grads(matcher.hidden), zero_grads(matcher.output)};
    ScorerGradients sg{zero_grads(scorer.cell), zero_grads(scorer.score_head)};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (loss.d_raw1(i, j) != 0.0)
          matcher_backward(matcher, first[i].descriptor, last[j].descriptor, loss.d_raw1(i, j),
                           mg);
        if (loss.d_raw2(i, j) != 0.0)
          scorer_backward(scorer, last[j].box, trk_boxes[i], trk_hidden[i], loss.d_raw2(i, j),
                          sg);
      }
    }
    // state head receives no gradient by design; it still sits in the group
    // so a future scheme can train it without changing the optimizer state
    // layout.
    FfGradients state_zero = zero_grads(scorer.state_head);

    std::vector<std::span<double>> params = {
        matcher.hidden.weight.data(), std::span<double>(matcher.hidden.bias),
        matcher.output.weight.data(), std::span<double>(matcher.output.bias),
        scorer.cell.weight.data(),    std::span<double>(scorer.cell.bias),
        scorer.score_head.weight.data(), std::span<double>(scorer.score_head.bias),
        scorer.state_head.weight.data(), std::span<double>(scorer.state_head.bias)};
    std::vector<std::span<const double>> grads = {
        mg.hidden.weight.data(), std::span<const double>(mg.hidden.bias),
        mg.output.weight.data(), std::span<const double>(mg.output.bias),
        sg.cell.weight.data(),   std::span<const double>(sg.cell.bias),
        sg.score_head.weight.data(), std::span<const double>(sg.score_head.bias),
        state_zero.weight.data(), std::span<const double>(state_zero.bias)};
    optimizer.step(params, grads);
  }
  return trace;
}

}  // namespace topotrack
