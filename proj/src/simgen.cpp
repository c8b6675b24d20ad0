#include "topotrack/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "topotrack/errors.hpp"
#include "topotrack/ops.hpp"
#include "topotrack/rng.hpp"

namespace topotrack {

void ScenarioConfig::validate() const {
  auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate(miss_rate) || !rate(fp_rate) || !rate(occlusion_threshold))
    throw DataError("scenario: rates must lie in [0,1]");
  if (world_w <= 0.0 || world_h <= 0.0) throw DataError("scenario: world size must be positive");
  if (speed_min < 0.0 || speed_max < speed_min)
    throw DataError("scenario: speed range must satisfy 0 <= min <= max");
  if (descriptor_dim == 0) throw DataError("scenario: descriptor dimension must be positive");
  if (descriptor_separation <= 0.0 || descriptor_separation > 1.0)
    throw DataError("scenario: descriptor separation must lie in (0,1]");
  if (pan_period <= 0.0) throw DataError("scenario: pan period must be positive");
  if (jitter < 0.0 || descriptor_noise < 0.0 || pan_amplitude < 0.0)
    throw DataError("scenario: noise scales must be nonnegative");
}

std::vector<double> occlusion_visibility(const std::vector<BoundingBox>& boxes) {
  const std::size_t n = boxes.size();
  std::vector<double> visibility(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double area_i = boxes[i].width * boxes[i].height;
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double area_j = boxes[j].width * boxes[j].height;
      const bool occludes = area_j > area_i || (area_j == area_i && j < i);
      if (!occludes) continue;
      const double x1 = std::max(boxes[i].left, boxes[j].left);
      const double y1 = std::max(boxes[i].top, boxes[j].top);
      const double x2 = std::min(boxes[i].left + boxes[i].width, boxes[j].left + boxes[j].width);
      const double y2 = std::min(boxes[i].top + boxes[i].height, boxes[j].top + boxes[j].height);
      const double inter = std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1);
      if (area_i > 0.0) worst = std::max(worst, inter / area_i);
    }
    visibility[i] = std::clamp(1.0 - worst, 0.0, 1.0);
  }
  return visibility;
}

namespace {

struct Agent {
  double x, y;    // normalized center
  double vx, vy;  // normalized per frame
  double w, h;    // pixels
  std::vector<double> descriptor;
};

std::vector<double> unit_descriptor(std::size_t dim, SeededRng& rng) {
  std::vector<double> v(dim);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-9) return unit_descriptor(dim, rng);
  for (double& x : v) x /= norm;
  return v;
}

// Rejection-sample identity descriptors until mutual cosines stay below the
// separation bound. Gives up after a bounded number of tries and keeps the
// best draw so pathological configs still terminate deterministically.
std::vector<double> separated_descriptor(const std::vector<std::vector<double>>& existing,
                                         std::size_t dim, double bound, SeededRng& rng) {
  std::vector<double> best;
  double best_worst = 2.0;
  for (int attempt = 0; attempt < 200; ++attempt) {
    std::vector<double> cand = unit_descriptor(dim, rng);
    double worst = 0.0;
    for (const auto& e : existing) worst = std::max(worst, std::abs(cosine(cand, e)));
    if (worst < bound) return cand;
    if (worst < best_worst) {
      best_worst = worst;
      best = std::move(cand);
    }
  }
  return best;
}

}  // namespace

Scenario generate(const ScenarioConfig& cfg) {
  cfg.validate();
  SeededRng rng(cfg.seed);
  Scenario scenario;
  scenario.config = cfg;
  scenario.detections.resize(cfg.frames);

  std::vector<Agent> agents;
  agents.reserve(cfg.agents);
  for (std::size_t a = 0; a < cfg.agents; ++a) {
    Agent agent;
    agent.x = rng.uniform(0.05, 0.95);
    agent.y = rng.uniform(0.05, 0.95);
    const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    const double angle = rng.uniform(0.0, 6.28318530717958647692);
    agent.vx = speed * std::cos(angle);
    agent.vy = speed * std::sin(angle);
    agent.w = rng.uniform(0.02, 0.04) * cfg.world_w;
    agent.h = std::min(rng.uniform(2.2, 2.8) * agent.w, 0.45 * cfg.world_h);
    agent.descriptor = separated_descriptor(scenario.base_descriptors, cfg.descriptor_dim,
                                            cfg.descriptor_separation, rng);
    scenario.base_descriptors.push_back(agent.descriptor);
    agents.push_back(std::move(agent));
  }

  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(cfg.descriptor_dim));
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    const std::size_t frame = t + 1;
    const double pan =
        cfg.pan_amplitude * cfg.world_w *
        std::sin(6.28318530717958647692 * static_cast<double>(t) / cfg.pan_period);

    std::vector<BoundingBox> view_boxes;
    view_boxes.reserve(cfg.agents);
    for (const Agent& agent : agents) {
      BoundingBox box;
      box.frame_w = cfg.world_w;
      box.frame_h = cfg.world_h;
      box.width = agent.w;
      box.height = agent.h;
      box.left = agent.x * cfg.world_w - agent.w / 2.0 - pan;
      box.top = agent.y * cfg.world_h - agent.h / 2.0;
      view_boxes.push_back(box);
    }
    const std::vector<double> visibility = occlusion_visibility(view_boxes);

    for (std::size_t a = 0; a < cfg.agents; ++a) {
      scenario.ground_truth.push_back(
          {frame, static_cast<int>(a + 1), view_boxes[a], visibility[a]});

      if (visibility[a] < cfg.occlusion_threshold) continue;
      if (cfg.miss_rate > 0.0 && rng.bernoulli(cfg.miss_rate)) continue;

      Detection det;
      det.frame = frame;
      det.box = view_boxes[a];
      if (cfg.jitter > 0.0) {
        det.box.left += rng.normal(0.0, cfg.jitter * det.box.width);
        det.box.top += rng.normal(0.0, cfg.jitter * det.box.height);
        det.box.width = std::max(4.0, det.box.width * (1.0 + rng.normal(0.0, cfg.jitter)));
        det.box.height = std::max(4.0, det.box.height * (1.0 + rng.normal(0.0, cfg.jitter)));
      }
      det.descriptor = agents[a].descriptor;
      if (cfg.descriptor_noise > 0.0) {
        const double sigma =
            cfg.descriptor_noise * (1.0 + 2.0 * (1.0 - visibility[a])) * inv_sqrt_dim;
        for (double& v : det.descriptor) v += rng.normal(0.0, sigma);
      }
      det.confidence = 0.5 + 0.5 * visibility[a];
      scenario.detections[t].push_back(std::move(det));
    }

    if (cfg.fp_rate > 0.0) {
      for (std::size_t a = 0; a < cfg.agents; ++a) {
        if (!rng.bernoulli(cfg.fp_rate)) continue;
        Detection det;
        det.frame = frame;
        det.box.frame_w = cfg.world_w;
        det.box.frame_h = cfg.world_h;
        det.box.width = rng.uniform(0.02, 0.04) * cfg.world_w;
        det.box.height = std::min(rng.uniform(2.2, 2.8) * det.box.width, 0.45 * cfg.world_h);
        det.box.left = rng.uniform(0.0, 1.0) * cfg.world_w - det.box.width / 2.0;
        det.box.top = rng.uniform(0.0, 1.0) * cfg.world_h - det.box.height / 2.0;
        det.descriptor = unit_descriptor(cfg.descriptor_dim, rng);
        det.confidence = rng.uniform(0.2, 0.7);
        scenario.detections[t].push_back(std::move(det));
      }
    }

    // advance, reflecting velocity at the walls
    for (Agent& agent : agents) {
      agent.x += agent.vx;
      agent.y += agent.vy;
      if (agent.x < 0.0) {
        agent.x = -agent.x;
        agent.vx = -agent.vx;
      } else if (agent.x > 1.0) {
        agent.x = 2.0 - agent.x;
        agent.vx = -agent.vx;
      }
      if (agent.y < 0.0) {
        agent.y = -agent.y;
        agent.vy = -agent.vy;
      } else if (agent.y > 1.0) {
        agent.y = 2.0 - agent.y;
        agent.vy = -agent.vy;
      }
    }
  }
  return scenario;
}

void export_mot(const Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw DataError("export_mot: cannot write " + p.string());
    return out;
  };

  {
    std::ofstream gt = open(dir / "gt.txt");
    char line[256];
    for (const auto& rec : scenario.ground_truth) {
      std::snprintf(line, sizeof(line), "%zu,%d,%.2f,%.2f,%.2f,%.2f,1,1,%.6f\n", rec.frame,
                    rec.id, rec.box.left, rec.box.top, rec.box.width, rec.box.height,
                    rec.visibility);
      gt << line;
    }
  }
  {
    std::ofstream det = open(dir / "det.txt");
    std::ofstream desc = open(dir / "det.desc");
    char line[256];
    for (std::size_t t = 0; t < scenario.detections.size(); ++t) {
      const auto& dets = scenario.detections[t];
      for (std::size_t i = 0; i < dets.size(); ++i) {
        const Detection& d = dets[i];
        std::snprintf(line, sizeof(line), "%zu,-1,%.2f,%.2f,%.2f,%.2f,%.6f,-1,-1,-1\n", t + 1,
                      d.box.left, d.box.top, d.box.width, d.box.height, d.confidence);
        det << line;
        desc << (t + 1) << ',' << i;
        for (double v : d.descriptor) {
          std::snprintf(line, sizeof(line), ",%.6f", v);
          desc << line;
        }
        desc << '\n';
      }
    }
  }
  {
    std::ofstream info = open(dir / "seqinfo.ini");
    info << "[Sequence]\n";
    info << "name=synthetic\n";
    info << "imWidth=" << static_cast<int>(scenario.config.world_w) << "\n";
    info << "imHeight=" << static_cast<int>(scenario.config.world_h) << "\n";
    info << "seqLength=" << scenario.config.frames << "\n";
    info << "frameRate=30\n";
  }
}

}  // namespace topotrack
