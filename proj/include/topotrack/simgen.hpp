#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "topotrack/box.hpp"

namespace topotrack {

/// Knobs for the deterministic crowd simulator. Agents follow
/// piecewise-constant velocities with wall reflection; corruption models the
/// failure modes trackers meet in practice (occlusion, missed detections,
/// clutter, box noise, camera pan).
struct ScenarioConfig {
  std::size_t agents = 10;
  std::size_t frames = 100;
  double world_w = 1920.0;
  double world_h = 1080.0;
  double speed_min = 0.002;  // normalized units per frame
  double speed_max = 0.008;
  std::size_t descriptor_dim = 16;
  double descriptor_separation = 0.6;  // max |cosine| between identity descriptors
  double descriptor_noise = 0.0;       // per-detection noise scale
  double occlusion_threshold = 0.0;    // drop detections with visibility below this
  double miss_rate = 0.0;
  double fp_rate = 0.0;  // expected false positives per frame, as a per-agent rate
  double jitter = 0.0;   // box corner/size noise relative to box dimensions
  double pan_amplitude = 0.0;  // horizontal viewport sweep, fraction of width
  double pan_period = 100.0;   // frames per full sine cycle
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruthRecord {
  std::size_t frame = 0;  // 1-based
  int id = 0;             // 1-based agent identity
  BoundingBox box;
  double visibility = 1.0;
};

struct Scenario {
  ScenarioConfig config;
  Sequence detections;  // per frame, index 0 = frame 1
  std::vector<GroundTruthRecord> ground_truth;
  std::vector<std::vector<double>> base_descriptors;  // per agent
};

Scenario generate(const ScenarioConfig& cfg);

/// Visibility per box: 1 minus the largest fractional overlap by any box with
/// strictly larger area (ties broken toward the lower index acting as the
/// occluder). Clamped to [0, 1].
std::vector<double> occlusion_visibility(const std::vector<BoundingBox>& boxes);

/// Writes gt.txt, det.txt, det.desc and seqinfo.ini under `dir`.
void export_mot(const Scenario& scenario, const std::filesystem::path& dir);

}  // namespace topotrack
