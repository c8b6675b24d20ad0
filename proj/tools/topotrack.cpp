// Command-line driver: synthetic data generation, unsupervised training of
// the similarity providers and the GCN, tracking, evaluation and plot export.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "topotrack/assoc.hpp"
#include "topotrack/errors.hpp"
#include "topotrack/motio.hpp"
#include "topotrack/params.hpp"
#include "topotrack/simgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace topotrack;

namespace {

struct IoPaths {
  std::string dets;
  std::string desc;
  std::string config;
  std::string seqinfo;
};

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return config_from_json_text("{}");
  return load_config(path);
}

// frame dimensions: explicit --seqinfo, else a seqinfo.ini next to the
// detection file, else the config defaults
SequenceInfo resolve_frame_dims(const IoPaths& io, const RunConfig& cfg) {
  if (!io.seqinfo.empty()) return read_seqinfo(io.seqinfo);
  const fs::path sibling = fs::path(io.dets).parent_path() / "seqinfo.ini";
  if (fs::exists(sibling)) return read_seqinfo(sibling);
  return {cfg.frame_w, cfg.frame_h};
}

std::map<std::size_t, std::vector<Detection>> load_detections(const IoPaths& io,
                                                              const RunConfig& cfg) {
  const SequenceInfo dims = resolve_frame_dims(io, cfg);
  const auto records = read_mot(io.dets, MotKind::detections);
  const auto sidecar = read_descriptor_sidecar(io.desc);
  return assemble_detections(records, sidecar, dims.frame_w, dims.frame_h);
}

Sequence to_sequence(const std::map<std::size_t, std::vector<Detection>>& by_frame) {
  Sequence seq;
  if (by_frame.empty()) return seq;
  const std::size_t first = by_frame.begin()->first;
  const std::size_t last = by_frame.rbegin()->first;
  seq.resize(last - first + 1);
  for (const auto& [frame, dets] : by_frame) seq[frame - first] = dets;
  return seq;
}

TrackerModels load_or_init_models(const std::string& params_in, const RunConfig& cfg) {
  if (!params_in.empty()) return load_models(params_in);
  return init_models(cfg);
}

TrackerConfig tracker_config(const RunConfig& cfg) {
  TrackerConfig tc;
  tc.fusion.alpha = cfg.alpha;
  tc.fusion.betas = cfg.betas;
  tc.strategy = cfg.graph_strategy();
  tc.tau_match = cfg.tau_match;
  tc.tau_det = cfg.tau_det;
  tc.max_age = cfg.max_age;
  tc.memory = cfg.memory;
  return tc;
}

void write_trace(const std::string& path, const std::string& header,
                 const std::vector<std::string>& rows) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace file " + path);
  out << header << "\n";
  for (const auto& row : rows) out << row << "\n";
}

json report_to_json(const EvalReport& r) {
  return json{{"IDF1", r.idf1},   {"MOTA", r.mota}, {"IDTP", r.idtp}, {"IDFP", r.idfp},
              {"IDFN", r.idfn},   {"FP", r.fp},     {"FN", r.fn},     {"IDSW", r.idsw},
              {"GT", r.gt},       {"TP", r.matches}};
}

int run_simulate(const ScenarioConfig& cfg, const std::string& out_dir) {
  const Scenario scenario = generate(cfg);
  export_mot(scenario, out_dir);
  std::size_t dets = 0;
  for (const auto& f : scenario.detections) dets += f.size();
  std::cerr << "wrote " << scenario.ground_truth.size() << " gt records, " << dets
            << " detections to " << out_dir << "\n";
  return 0;
}

int run_train_gnn(const IoPaths& io, const std::string& params_in, const std::string& params_out,
                  const std::string& trace_path, std::size_t steps, double lr_override) {
  const RunConfig cfg = load_run_config(io.config);
  TrackerModels models = load_or_init_models(params_in, cfg);

  const auto by_frame = load_detections(io, cfg);
  std::vector<FrameGraph> graphs;
  const GraphStrategy strategy = cfg.graph_strategy();
  for (const auto& [frame, dets] : by_frame) {
    if (dets.empty()) continue;
    graphs.push_back(build_graph(dets, strategy, models.edge_layer));
  }
  if (graphs.empty()) throw DataError("train-gnn: no nonempty frames in input");

  AdamOptimizer opt({.lr = lr_override > 0.0 ? lr_override : cfg.lr_gnn});
  SeededRng rng(cfg.seed + 1000003);  // distinct stream from model init
  const auto trace = train_gnn(models.gnn, graphs, {cfg.p1, cfg.p2, cfg.p3, cfg.epsilon},
                               {cfg.gamma}, opt, steps, rng);

  save_models(models, params_out);
  std::vector<std::string> rows;
  char buf[128];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g", i, trace[i].j2, trace[i].jr,
                  trace[i].ja);
    rows.emplace_back(buf);
  }
  write_trace(trace_path, "step,j2,jr,ja", rows);
  if (!trace.empty())
    std::cerr << "train-gnn: J2 " << trace.front().j2 << " -> " << trace.back().j2 << " over "
              << trace.size() << " steps\n";
  return 0;
}

int run_train_providers(const IoPaths& io, const std::string& params_in,
                        const std::string& params_out, const std::string& trace_path,
                        std::size_t steps, double lr_override) {
  const RunConfig cfg = load_run_config(io.config);
  TrackerModels models = load_or_init_models(params_in, cfg);

  const Sequence seq = to_sequence(load_detections(io, cfg));
  if (seq.empty()) throw DataError("train-providers: empty detection input");

  AdamOptimizer opt({.lr = lr_override > 0.0 ? lr_override : cfg.lr_providers});
  SeededRng rng(cfg.seed + 2000003);
  const auto trace = train_providers(models.matcher, models.scorer, {seq},
                                     {cfg.window, cfg.v_max}, opt, steps, rng);

  save_models(models, params_out);
  std::vector<std::string> rows;
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g", i, trace[i]);
    rows.emplace_back(buf);
  }
  write_trace(trace_path, "step,j1", rows);
  if (!trace.empty())
    std::cerr << "train-providers: J1 " << trace.front() << " -> " << trace.back() << " over "
              << trace.size() << " steps\n";
  return 0;
}

int run_track(const IoPaths& io, const std::string& params_path, const std::string& out_path) {
  const RunConfig cfg = load_run_config(io.config);
  const TrackerModels models = load_models(params_path);
  const auto by_frame = load_detections(io, cfg);
  const auto records = track_sequence(by_frame, models, tracker_config(cfg));
  write_mot(records, out_path);
  std::cerr << "track: wrote " << records.size() << " records to " << out_path << "\n";
  return 0;
}

int run_evaluate(const std::string& gt_path, const std::string& pred_path, double iou_thr,
                 const std::string& json_path) {
  const auto gt = read_mot(gt_path, MotKind::groundtruth);
  const auto pred = read_mot(pred_path, MotKind::detections);
  const EvalReport report = evaluate(gt, pred, iou_thr);

  const json doc = report_to_json(report);
  std::cout << doc.dump(2) << "\n";
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw DataError("cannot write " + json_path);
    out << doc.dump(2) << "\n";
  }
  std::cerr << "  IDF1   MOTA   IDSW  FP     FN     GT\n";
  char buf[128];
  std::snprintf(buf, sizeof(buf), "  %.4f %.4f %-5zu %-6zu %-6zu %zu\n", report.idf1,
                report.mota, report.idsw, report.fp, report.fn, report.gt);
  std::cerr << buf;
  return 0;
}

int run_export_plot(const IoPaths& io, const std::string& params_path,
                    const std::string& out_path) {
  const RunConfig cfg = load_run_config(io.config);
  const TrackerModels models = load_models(params_path);
  const TrackerConfig tc = tracker_config(cfg);
  const auto by_frame = load_detections(io, cfg);

  json frames = json::array();
  if (!by_frame.empty()) {
    TrackerState state;
    const std::size_t first = by_frame.begin()->first;
    const std::size_t last = by_frame.rbegin()->first;
    static const std::vector<Detection> kEmpty;
    for (std::size_t frame = first; frame <= last; ++frame) {
      const auto it = by_frame.find(frame);
      const std::vector<Detection>& dets = it == by_frame.end() ? kEmpty : it->second;

      const int first_new_id = state.next_id;
      StepDebug debug;
      const AssociationResult result = track_step(state, dets, frame, models, tc, &debug);

      std::vector<int> ids(dets.size(), -1);
      for (const auto& m : result.matches) ids[m.detection] = m.tracklet_id;
      int next_spawned = first_new_id;
      for (std::size_t i : result.unmatched_detections) {
        if (dets[i].confidence >= tc.tau_det) ids[i] = next_spawned++;
      }

      json jboxes = json::array(), jconf = json::array();
      for (const auto& d : dets) {
        jboxes.push_back({d.box.left, d.box.top, d.box.width, d.box.height});
        jconf.push_back(d.confidence);
      }
      json jfused = json::array();
      for (std::size_t i = 0; i < debug.fused.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < debug.fused.cols(); ++j) row.push_back(debug.fused(i, j));
        jfused.push_back(row);
      }
      frames.push_back({{"frame", frame},
                        {"boxes", jboxes},
                        {"confidences", jconf},
                        {"ids", ids},
                        {"tracklets", debug.tracklet_ids},
                        {"fused", jfused}});
    }
  }

  const SequenceInfo dims = resolve_frame_dims(io, cfg);
  const json doc = {{"frame_w", dims.frame_w}, {"frame_h", dims.frame_h}, {"frames", frames}};
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write " + out_path);
  out << doc.dump() << "\n";
  std::cerr << "export-plot: wrote " << frames.size() << " frames to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topotrack: unsupervised multi-object tracking with graph topology guidance"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic crowd scenario");
  ScenarioConfig scfg;
  std::string sim_out;
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--agents", scfg.agents);
  sim->add_option("--frames", scfg.frames);
  sim->add_option("--world-w", scfg.world_w);
  sim->add_option("--world-h", scfg.world_h);
  sim->add_option("--speed-min", scfg.speed_min);
  sim->add_option("--speed-max", scfg.speed_max);
  sim->add_option("--descriptor-dim", scfg.descriptor_dim);
  sim->add_option("--separation", scfg.descriptor_separation);
  sim->add_option("--noise", scfg.descriptor_noise);
  sim->add_option("--occlusion-threshold", scfg.occlusion_threshold);
  sim->add_option("--miss-rate", scfg.miss_rate);
  sim->add_option("--fp-rate", scfg.fp_rate);
  sim->add_option("--jitter", scfg.jitter);
  sim->add_option("--pan-amplitude", scfg.pan_amplitude);
  sim->add_option("--pan-period", scfg.pan_period);
  sim->add_option("--seed", scfg.seed);

  // shared io options
  IoPaths gnn_io, prov_io, track_io, plot_io;
  std::string gnn_params_in, gnn_params_out, gnn_trace;
  std::size_t gnn_steps = 500;
  double gnn_lr = 0.0;
  auto* tg = app.add_subcommand("train-gnn", "unsupervised GCN training on detection graphs");
  tg->add_option("--in", gnn_io.dets, "detection file (MOT format)")->required();
  tg->add_option("--desc", gnn_io.desc, "descriptor sidecar")->required();
  tg->add_option("--config", gnn_io.config, "run config JSON");
  tg->add_option("--seqinfo", gnn_io.seqinfo, "seqinfo.ini path");
  tg->add_option("--params-in", gnn_params_in, "existing parameter file to continue from");
  tg->add_option("--params-out", gnn_params_out, "output parameter file")->required();
  tg->add_option("--trace-out", gnn_trace, "loss trace CSV");
  tg->add_option("--steps", gnn_steps, "optimizer steps");
  tg->add_option("--lr", gnn_lr, "learning rate override");

  std::string prov_params_in, prov_params_out, prov_trace;
  std::size_t prov_steps = 2000;
  double prov_lr = 0.0;
  auto* tp = app.add_subcommand("train-providers",
                                "cross-input consistency training of the appearance matcher "
                                "and motion scorer");
  tp->add_option("--in", prov_io.dets)->required();
  tp->add_option("--desc", prov_io.desc)->required();
  tp->add_option("--config", prov_io.config);
  tp->add_option("--seqinfo", prov_io.seqinfo);
  tp->add_option("--params-in", prov_params_in);
  tp->add_option("--params-out", prov_params_out)->required();
  tp->add_option("--trace-out", prov_trace);
  tp->add_option("--steps", prov_steps);
  tp->add_option("--lr", prov_lr);

  std::string track_params, track_out;
  auto* tr = app.add_subcommand("track", "run the tracker over a detection file");
  tr->add_option("--in", track_io.dets)->required();
  tr->add_option("--desc", track_io.desc)->required();
  tr->add_option("--params", track_params, "trained parameter file")->required();
  tr->add_option("--out", track_out, "output track file (MOT format)")->required();
  tr->add_option("--config", track_io.config);
  tr->add_option("--seqinfo", track_io.seqinfo);

  std::string eval_gt, eval_pred, eval_json;
  double eval_iou = 0.5;
  auto* ev = app.add_subcommand(
      "evaluate", "IDF1/MOTA/IDSW against ground truth (HOTA is out of scope here; use "
                  "external tooling such as TrackEval for it)");
  ev->add_option("--gt", eval_gt)->required();
  ev->add_option("--pred", eval_pred)->required();
  ev->add_option("--iou", eval_iou, "IoU threshold (default 0.5)");
  ev->add_option("--json", eval_json, "also write the JSON report here");

  std::string plot_params, plot_out;
  auto* ep = app.add_subcommand("export-plot",
                                "per-frame overlay data (boxes, ids, fused scores) as JSON");
  ep->add_option("--in", plot_io.dets)->required();
  ep->add_option("--desc", plot_io.desc)->required();
  ep->add_option("--params", plot_params)->required();
  ep->add_option("--config", plot_io.config);
  ep->add_option("--seqinfo", plot_io.seqinfo);
  ep->add_option("--out", plot_out)->required();

  try {
    app.parse(argc, argv);
    if (sim->parsed()) return run_simulate(scfg, sim_out);
    if (tg->parsed())
      return run_train_gnn(gnn_io, gnn_params_in, gnn_params_out, gnn_trace, gnn_steps, gnn_lr);
    if (tp->parsed())
      return run_train_providers(prov_io, prov_params_in, prov_params_out, prov_trace,
                                 prov_steps, prov_lr);
    if (tr->parsed()) return run_track(track_io, track_params, track_out);
    if (ev->parsed()) return run_evaluate(eval_gt, eval_pred, eval_iou, eval_json);
    if (ep->parsed()) return run_export_plot(plot_io, plot_params, plot_out);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
