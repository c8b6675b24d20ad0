#include "topotrack/motio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "topotrack/assign.hpp"
#include "topotrack/errors.hpp"

namespace topotrack {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" +
                    s + "'");
  }
}

}  // namespace

std::vector<MotRecord> read_mot(const std::filesystem::path& path, MotKind kind,
                                const GtFilter& filter) {
  std::ifstream in(path);
  if (!in) throw DataError("read_mot: cannot open " + path.string());

  std::vector<MotRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() < 7)
      throw DataError("read_mot: line " + std::to_string(line_no) + " has " +
                      std::to_string(f.size()) + " fields, expected at least 7");
    MotRecord rec;
    const double frame = parse_double(f[0], line_no, "frame");
    if (frame < 1.0 || frame != std::floor(frame))
      throw DataError("read_mot: line " + std::to_string(line_no) + ": bad frame index");
    rec.frame = static_cast<std::size_t>(frame);
    rec.id = static_cast<int>(parse_double(f[1], line_no, "id"));
    rec.left = parse_double(f[2], line_no, "left");
    rec.top = parse_double(f[3], line_no, "top");
    rec.width = parse_double(f[4], line_no, "width");
    rec.height = parse_double(f[5], line_no, "height");
    rec.confidence = parse_double(f[6], line_no, "confidence");
    if (f.size() > 7) rec.extra1 = parse_double(f[7], line_no, "field 8");
    if (f.size() > 8) rec.extra2 = parse_double(f[8], line_no, "field 9");
    if (f.size() > 9) rec.extra3 = parse_double(f[9], line_no, "field 10");
    if (rec.width <= 0.0 || rec.height <= 0.0)
      throw DataError("read_mot: line " + std::to_string(line_no) +
                      ": width and height must be positive");

    if (kind == MotKind::groundtruth) {
      // gt layout: field 7 = active flag, 8 = class, 9 = visibility
      if (filter.require_active && rec.confidence != 1.0) continue;
      if (!filter.keep_classes.empty() && f.size() > 7 &&
          filter.keep_classes.count(static_cast<int>(rec.extra1)) == 0)
        continue;
      if (f.size() > 8 && rec.extra2 < filter.min_visibility) continue;
    }
    records.push_back(rec);
  }
  return records;
}

void write_mot(const std::vector<TrackRecord>& tracks, const std::filesystem::path& path) {
  std::vector<TrackRecord> sorted = tracks;
  std::sort(sorted.begin(), sorted.end(), [](const TrackRecord& a, const TrackRecord& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return a.id < b.id;
  });
  std::ofstream out(path);
  if (!out) throw DataError("write_mot: cannot write " + path.string());
  char line[256];
  for (const auto& t : sorted) {
    std::snprintf(line, sizeof(line), "%zu,%d,%.2f,%.2f,%.2f,%.2f,1,-1,-1,-1\n", t.frame, t.id,
                  t.box.left, t.box.top, t.box.width, t.box.height);
    out << line;
  }
}

DescriptorSidecar read_descriptor_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_descriptor_sidecar: cannot open " + path.string());

  std::map<std::size_t, std::map<std::size_t, std::vector<double>>> staged;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() < 3)
      throw DataError("descriptor sidecar: line " + std::to_string(line_no) + " is too short");
    const std::size_t frame =
        static_cast<std::size_t>(parse_double(f[0], line_no, "frame"));
    const std::size_t index =
        static_cast<std::size_t>(parse_double(f[1], line_no, "index"));
    std::vector<double> vec;
    vec.reserve(f.size() - 2);
    for (std::size_t i = 2; i < f.size(); ++i)
      vec.push_back(parse_double(f[i], line_no, "descriptor entry"));
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim)
      throw DataError("descriptor sidecar: line " + std::to_string(line_no) +
                      ": inconsistent descriptor dimension");
    if (!staged[frame].emplace(index, std::move(vec)).second)
      throw DataError("descriptor sidecar: line " + std::to_string(line_no) +
                      ": duplicate (frame,index)");
  }

  DescriptorSidecar out;
  for (auto& [frame, by_index] : staged) {
    std::size_t expected = 0;
    for (auto& [index, vec] : by_index) {
      if (index != expected++)
        throw DataError("descriptor sidecar: frame " + std::to_string(frame) +
                        ": detection indices are not contiguous from 0");
      out[frame].push_back(std::move(vec));
    }
  }
  return out;
}

std::map<std::size_t, std::vector<Detection>> assemble_detections(
    const std::vector<MotRecord>& records, const DescriptorSidecar& descriptors, double frame_w,
    double frame_h) {
  std::map<std::size_t, std::vector<Detection>> out;
  for (const auto& rec : records) {
    Detection det;
    det.frame = rec.frame;
    det.box = rec.box(frame_w, frame_h);
    det.confidence = rec.confidence;
    out[rec.frame].push_back(std::move(det));
  }
  for (auto& [frame, dets] : out) {
    const auto it = descriptors.find(frame);
    if (it == descriptors.end() || it->second.size() != dets.size())
      throw DataError("assemble_detections: descriptor sidecar does not cover frame " +
                      std::to_string(frame));
    for (std::size_t i = 0; i < dets.size(); ++i) dets[i].descriptor = it->second[i];
  }
  return out;
}

SequenceInfo read_seqinfo(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("read_seqinfo: cannot open " + path.string());
  SequenceInfo info;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    while (!value.empty() && (value.back() == '\r' || value.back() == ' ')) value.pop_back();
    if (key == "imWidth") info.frame_w = std::stod(value);
    if (key == "imHeight") info.frame_h = std::stod(value);
  }
  if (info.frame_w <= 0.0 || info.frame_h <= 0.0)
    throw DataError("read_seqinfo: missing imWidth/imHeight in " + path.string());
  return info;
}

namespace {

struct FrameBoxes {
  std::vector<const MotRecord*> records;
};

std::map<std::size_t, FrameBoxes> group_by_frame(const std::vector<MotRecord>& records) {
  std::map<std::size_t, FrameBoxes> out;
  for (const auto& r : records) out[r.frame].records.push_back(&r);
  return out;
}

double record_iou(const MotRecord& a, const MotRecord& b) {
  return iou(a.box(1.0, 1.0), b.box(1.0, 1.0));
}

}  // namespace

EvalReport evaluate(const std::vector<MotRecord>& gt, const std::vector<MotRecord>& pred,
                    double iou_threshold) {
  if (gt.empty()) throw DataError("evaluate: empty ground truth");

  EvalReport report;
  report.gt = gt.size();

  const auto gt_frames = group_by_frame(gt);
  const auto pred_frames = group_by_frame(pred);

  // frame-level matching for FP/FN/IDSW
  std::map<int, int> last_pred_of_gt;  // most recent predicted id per gt id
  std::set<std::size_t> all_frames;
  for (const auto& [f, _] : gt_frames) all_frames.insert(f);
  for (const auto& [f, _] : pred_frames) all_frames.insert(f);

  for (std::size_t frame : all_frames) {
    const auto git = gt_frames.find(frame);
    const auto pit = pred_frames.find(frame);
    const std::size_t ng = git == gt_frames.end() ? 0 : git->second.records.size();
    const std::size_t np = pit == pred_frames.end() ? 0 : pit->second.records.size();
    if (ng == 0) {
      report.fp += np;
      continue;
    }
    if (np == 0) {
      report.fn += ng;
      continue;
    }
    Matrix ious(ng, np);
    for (std::size_t i = 0; i < ng; ++i)
      for (std::size_t j = 0; j < np; ++j)
        ious(i, j) = record_iou(*git->second.records[i], *pit->second.records[j]);
    const AssignmentResult assignment = hungarian_match(ious, iou_threshold);
    report.matches += assignment.matches.size();
    report.fp += np - assignment.matches.size();
    report.fn += ng - assignment.matches.size();
    for (const auto& m : assignment.matches) {
      const int gid = git->second.records[m.row]->id;
      const int pid = pit->second.records[m.col]->id;
      const auto it = last_pred_of_gt.find(gid);
      if (it != last_pred_of_gt.end() && it->second != pid) ++report.idsw;
      last_pred_of_gt[gid] = pid;
    }
  }
  report.mota = 1.0 - static_cast<double>(report.fp + report.fn + report.idsw) /
                          static_cast<double>(report.gt);

  // trajectory-level IDF1: optimal global pairing maximizing identity overlap
  std::map<int, std::map<std::size_t, const MotRecord*>> gt_tracks, pred_tracks;
  for (const auto& r : gt) gt_tracks[r.id][r.frame] = &r;
  for (const auto& r : pred) pred_tracks[r.id][r.frame] = &r;

  std::vector<int> gt_ids, pred_ids;
  for (const auto& [id, _] : gt_tracks) gt_ids.push_back(id);
  for (const auto& [id, _] : pred_tracks) pred_ids.push_back(id);

  Matrix overlap(gt_ids.size(), pred_ids.size());
  for (std::size_t i = 0; i < gt_ids.size(); ++i) {
    const auto& gtrack = gt_tracks[gt_ids[i]];
    for (std::size_t j = 0; j < pred_ids.size(); ++j) {
      const auto& ptrack = pred_tracks[pred_ids[j]];
      double count = 0.0;
      for (const auto& [frame, grec] : gtrack) {
        const auto it = ptrack.find(frame);
        if (it != ptrack.end() && record_iou(*grec, *it->second) >= iou_threshold) count += 1.0;
      }
      overlap(i, j) = count;
    }
  }
  const AssignmentResult pairing = hungarian_match(overlap, 0.0);
  std::size_t idtp = 0;
  for (const auto& m : pairing.matches) idtp += static_cast<std::size_t>(m.score);
  report.idtp = idtp;
  report.idfn = report.gt - idtp;
  report.idfp = pred.size() - idtp;
  const double denom = static_cast<double>(2 * report.idtp + report.idfp + report.idfn);
  report.idf1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(report.idtp) / denom;
  return report;
}

EvalReport merge_reports(const std::map<std::string, EvalReport>& reports) {
  EvalReport total;
  for (const auto& [name, r] : reports) {
    total.idtp += r.idtp;
    total.idfp += r.idfp;
    total.idfn += r.idfn;
    total.fp += r.fp;
    total.fn += r.fn;
    total.idsw += r.idsw;
    total.gt += r.gt;
    total.matches += r.matches;
    total.per_sequence.emplace(name, r);
  }
  if (total.gt > 0)
    total.mota = 1.0 - static_cast<double>(total.fp + total.fn + total.idsw) /
                           static_cast<double>(total.gt);
  const double denom = static_cast<double>(2 * total.idtp + total.idfp + total.idfn);
  total.idf1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(total.idtp) / denom;
  return total;
}

GraphStrategy RunConfig::graph_strategy() const {
  if (strategy == "distance_threshold") return GraphStrategy::threshold(t_box);
  if (strategy == "knn") return GraphStrategy::knn(k);
  if (strategy == "full") return GraphStrategy::full();
  throw DataError("config: unknown graph strategy '" + strategy + "'");
}

void RunConfig::validate() const {
  double sum = alpha;
  std::string betas_text;
  for (double b : betas) {
    sum += b;
    if (!betas_text.empty()) betas_text += ", ";
    betas_text += std::to_string(b);
  }
  if (alpha < 0.0 || std::abs(sum - 1.0) > 1e-9)
    throw DataError("config: alpha (" + std::to_string(alpha) + ") plus betas (" + betas_text +
                    ") must sum to 1");
  for (double b : betas)
    if (b < 0.0) throw DataError("config: betas must be nonnegative");
  graph_strategy();  // validates the strategy string
  if (gamma < 0.0 || gamma > 1.0) throw DataError("config: gamma must lie in [0,1]");
  for (double p : {p1, p2, p3})
    if (p < 0.0 || p > 1.0) throw DataError("config: augmentation probabilities must lie in [0,1]");
  if (epsilon < 0.0) throw DataError("config: epsilon must be nonnegative");
  if (lr_gnn <= 0.0 || lr_providers <= 0.0) throw DataError("config: learning rates must be positive");
  if (v_max <= 0.0) throw DataError("config: v_max must be positive");
  if (descriptor_dim == 0 || matcher_hidden == 0 || motion_hidden == 0)
    throw DataError("config: model dimensions must be positive");
  if (memory == 0) throw DataError("config: memory must be at least 1");
  if (window < 2) throw DataError("config: window must be at least 2");
  if (frame_w <= 0.0 || frame_h <= 0.0) throw DataError("config: frame size must be positive");
}

RunConfig config_from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("config: top-level JSON value must be an object");

  RunConfig cfg;
  bool seed_set = false;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "alpha") cfg.alpha = value.get<double>();
      else if (key == "betas") cfg.betas = value.get<std::vector<double>>();
      else if (key == "strategy") cfg.strategy = value.get<std::string>();
      else if (key == "t_box") cfg.t_box = value.get<double>();
      else if (key == "k") cfg.k = value.get<std::size_t>();
      else if (key == "gcn_relu") cfg.gcn_relu = value.get<bool>();
      else if (key == "gamma") cfg.gamma = value.get<double>();
      else if (key == "epsilon") cfg.epsilon = value.get<double>();
      else if (key == "p1") cfg.p1 = value.get<double>();
      else if (key == "p2") cfg.p2 = value.get<double>();
      else if (key == "p3") cfg.p3 = value.get<double>();
      else if (key == "lr_gnn") cfg.lr_gnn = value.get<double>();
      else if (key == "lr_providers") cfg.lr_providers = value.get<double>();
      else if (key == "tau_match") cfg.tau_match = value.get<double>();
      else if (key == "tau_det") cfg.tau_det = value.get<double>();
      else if (key == "max_age") cfg.max_age = value.get<std::size_t>();
      else if (key == "window") cfg.window = value.get<std::size_t>();
      else if (key == "memory") cfg.memory = value.get<std::size_t>();
      else if (key == "v_max") cfg.v_max = value.get<double>();
      else if (key == "descriptor_dim") cfg.descriptor_dim = value.get<std::size_t>();
      else if (key == "matcher_hidden") cfg.matcher_hidden = value.get<std::size_t>();
      else if (key == "motion_hidden") cfg.motion_hidden = value.get<std::size_t>();
      else if (key == "frame_w") cfg.frame_w = value.get<double>();
      else if (key == "frame_h") cfg.frame_h = value.get<double>();
      else if (key == "seed") { cfg.seed = value.get<std::uint64_t>(); seed_set = true; }
      else throw DataError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw DataError("config: bad value for '" + key + "': " + e.what());
    }
  }
  if (!seed_set) {
    if (const char* env = std::getenv("TOPOTRACK_SEED")) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw DataError("config: TOPOTRACK_SEED is not an integer");
      }
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

}  // namespace topotrack
