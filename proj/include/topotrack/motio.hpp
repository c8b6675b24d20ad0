#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "topotrack/assoc.hpp"
#include "topotrack/box.hpp"
#include "topotrack/graph.hpp"

namespace topotrack {

/// One MOTChallenge CSV record. For ground-truth files the seventh field is
/// the active flag, the eighth the class and the ninth the visibility; for
/// detections the seventh is the confidence and the trailing three are -1.
struct MotRecord {
  std::size_t frame = 0;
  int id = -1;
  double left = 0.0, top = 0.0, width = 0.0, height = 0.0;
  double confidence = 1.0;
  double extra1 = -1.0, extra2 = -1.0, extra3 = -1.0;

  BoundingBox box(double frame_w, double frame_h) const {
    return {left, top, width, height, frame_w, frame_h};
  }
};

enum class MotKind { detections, groundtruth };

/// Ground-truth row filter following MOTChallenge conventions.
struct GtFilter {
  bool require_active = true;
  std::set<int> keep_classes = {1};  // empty set keeps everything
  double min_visibility = 0.0;
};

std::vector<MotRecord> read_mot(const std::filesystem::path& path, MotKind kind,
                                const GtFilter& filter = {});

void write_mot(const std::vector<TrackRecord>& tracks, const std::filesystem::path& path);

/// Sidecar descriptors keyed by frame, ordered by detection index.
using DescriptorSidecar = std::map<std::size_t, std::vector<std::vector<double>>>;

DescriptorSidecar read_descriptor_sidecar(const std::filesystem::path& path);

/// Joins detection records with their sidecar descriptors into per-frame
/// detection lists ready for the tracker.
std::map<std::size_t, std::vector<Detection>> assemble_detections(
    const std::vector<MotRecord>& records, const DescriptorSidecar& descriptors, double frame_w,
    double frame_h);

/// Frame dimensions parsed from a MOTChallenge seqinfo.ini.
struct SequenceInfo {
  double frame_w = 0.0;
  double frame_h = 0.0;
};
SequenceInfo read_seqinfo(const std::filesystem::path& path);

struct EvalReport {
  double idf1 = 0.0;
  double mota = 0.0;
  std::size_t idtp = 0, idfp = 0, idfn = 0;
  std::size_t fp = 0, fn = 0, idsw = 0;
  std::size_t gt = 0;          // total ground-truth boxes
  std::size_t matches = 0;     // frame-level true positives
  std::map<std::string, EvalReport> per_sequence;
};

/// IDF1 via a global optimal trajectory pairing, MOTA from per-frame optimal
/// IoU matching with identity-handover switch counting.
EvalReport evaluate(const std::vector<MotRecord>& gt, const std::vector<MotRecord>& pred,
                    double iou_threshold = 0.5);

/// Sum counts across sequences and recompute the ratios.
EvalReport merge_reports(const std::map<std::string, EvalReport>& reports);

/// All run hyper-parameters with their paper-default values.
struct RunConfig {
  double alpha = 0.7;
  std::vector<double> betas = {0.2, 0.1};
  std::string strategy = "distance_threshold";  // | "knn" | "full"
  double t_box = 0.1;
  std::size_t k = 3;
  bool gcn_relu = false;
  double gamma = 0.8;
  double epsilon = 0.01;
  double p1 = 0.1, p2 = 0.1, p3 = 0.1;
  double lr_gnn = 2e-6;
  double lr_providers = 1e-3;
  double tau_match = 0.05;
  double tau_det = 0.4;
  std::size_t max_age = 30;
  std::size_t window = 8;
  std::size_t memory = 6;  // stored observations: current + 5 past
  double v_max = 0.02;
  std::size_t descriptor_dim = 16;
  std::size_t matcher_hidden = 32;
  std::size_t motion_hidden = 64;
  double frame_w = 1920.0;
  double frame_h = 1080.0;
  std::uint64_t seed = 7;

  std::size_t gnn_layers() const { return betas.size(); }
  GraphStrategy graph_strategy() const;
  void validate() const;
};

/// JSON config document; missing keys keep their defaults. The environment
/// variable TOPOTRACK_SEED overrides the default seed when the document does
/// not set one.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text);

}  // namespace topotrack
