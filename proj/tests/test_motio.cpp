#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "support/oracles.hpp"
#include "topotrack/errors.hpp"
#include "topotrack/motio.hpp"
#include "topotrack/rng.hpp"

using namespace topotrack;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

MotRecord rec(std::size_t frame, int id, double l, double t, double w, double h) {
  MotRecord r;
  r.frame = frame;
  r.id = id;
  r.left = l;
  r.top = t;
  r.width = w;
  r.height = h;
  return r;
}

// one gt track: 4 frames at a fixed spot
std::vector<MotRecord> four_frame_gt() {
  std::vector<MotRecord> gt;
  for (std::size_t f = 1; f <= 4; ++f) gt.push_back(rec(f, 1, 100, 100, 50, 80));
  return gt;
}

}  // namespace

TEST_CASE("read_mot: detection line parses field by field") {
  const auto path = write_temp("topotrack_det.txt", "1,-1,100,200,50,80,0.9,-1,-1,-1\n");
  const auto records = read_mot(path, MotKind::detections);
  REQUIRE(records.size() == 1);
  CHECK(records[0].frame == 1);
  CHECK(records[0].id == -1);
  CHECK(records[0].left == 100.0);
  CHECK(records[0].top == 200.0);
  CHECK(records[0].width == 50.0);
  CHECK(records[0].height == 80.0);
  CHECK(records[0].confidence == 0.9);
}

TEST_CASE("read_mot: empty file, short line, missing file") {
  CHECK(read_mot(write_temp("topotrack_empty.txt", ""), MotKind::detections).empty());

  const auto bad = write_temp("topotrack_bad.txt", "1,-1,100,200,50,80\n");
  try {
    read_mot(bad, MotKind::detections);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }

  CHECK_THROWS_AS(read_mot("/nonexistent/nothing.txt", MotKind::detections), DataError);
}

TEST_CASE("read_mot: ground-truth filtering follows the active/class flags") {
  const auto path = write_temp("topotrack_gt.txt",
                               "1,1,10,10,5,5,1,1,1.0\n"
                               "1,2,20,20,5,5,0,1,1.0\n"   // inactive
                               "1,3,30,30,5,5,1,7,1.0\n"   // other class
                               "2,1,11,10,5,5,1,1,0.2\n");
  CHECK(read_mot(path, MotKind::groundtruth).size() == 2);

  GtFilter lenient;
  lenient.require_active = false;
  lenient.keep_classes.clear();
  CHECK(read_mot(path, MotKind::groundtruth, lenient).size() == 4);

  GtFilter strict;
  strict.min_visibility = 0.5;
  CHECK(read_mot(path, MotKind::groundtruth, strict).size() == 1);
}

TEST_CASE("write_mot round-trips through read_mot") {
  std::vector<TrackRecord> tracks;
  tracks.push_back({2, 7, {15.25, 30.5, 40.0, 90.0, 1000.0, 1000.0}});
  tracks.push_back({1, 7, {10.0, 20.0, 40.0, 90.0, 1000.0, 1000.0}});
  tracks.push_back({1, 3, {500.0, 300.0, 45.5, 95.25, 1000.0, 1000.0}});

  const auto path = std::filesystem::temp_directory_path() / "topotrack_tracks.txt";
  write_mot(tracks, path);
  const auto readback = read_mot(path, MotKind::detections);
  REQUIRE(readback.size() == 3);
  // sorted by frame then id, ids preserved verbatim
  CHECK(readback[0].frame == 1);
  CHECK(readback[0].id == 3);
  CHECK(readback[1].id == 7);
  CHECK(readback[2].frame == 2);
  CHECK(readback[0].left == 500.0);
  CHECK(readback[0].height == 95.25);
}

TEST_CASE("evaluate: identical tracks score perfectly") {
  const auto gt = four_frame_gt();
  std::vector<MotRecord> pred = gt;
  for (auto& p : pred) p.id = 42;  // relabeled but consistent
  const EvalReport report = evaluate(gt, pred);
  CHECK(report.idf1 == 1.0);
  CHECK(report.mota == 1.0);
  CHECK(report.idsw == 0);
  CHECK(report.idtp == 4);
}

TEST_CASE("evaluate: hand-computed IDF1 = 6/7") {
  const auto gt = four_frame_gt();
  std::vector<MotRecord> pred;
  for (std::size_t f = 1; f <= 3; ++f) pred.push_back(rec(f, 9, 100, 100, 50, 80));
  const EvalReport report = evaluate(gt, pred);
  CHECK(report.idtp == 3);
  CHECK(report.idfn == 1);
  CHECK(report.idfp == 0);
  CHECK(report.idf1 == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("evaluate: hand-computed MOTA = 0.6") {
  // 10 gt boxes; predictions miss 2, add 1 spurious box, switch id once
  std::vector<MotRecord> gt;
  for (std::size_t f = 1; f <= 10; ++f) gt.push_back(rec(f, 1, 100, 100, 50, 80));
  std::vector<MotRecord> pred;
  for (std::size_t f = 1; f <= 4; ++f) pred.push_back(rec(f, 5, 100, 100, 50, 80));
  for (std::size_t f = 5; f <= 8; ++f) pred.push_back(rec(f, 6, 100, 100, 50, 80));
  pred.push_back(rec(3, 8, 700, 700, 50, 80));  // far from everything
  const EvalReport report = evaluate(gt, pred);
  CHECK(report.fp == 1);
  CHECK(report.fn == 2);
  CHECK(report.idsw == 1);
  CHECK(report.gt == 10);
  CHECK(report.mota == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("evaluate: invariant under bijective relabeling of predicted ids") {
  SeededRng rng(33);
  std::vector<MotRecord> gt, pred;
  for (int id = 1; id <= 4; ++id) {
    for (std::size_t f = 1; f <= 15; ++f) {
      const double x = 100.0 * id + 2.0 * static_cast<double>(f);
      gt.push_back(rec(f, id, x, 50.0 * id, 40, 70));
      if (rng.uniform() < 0.85) {
        const double jitter = rng.uniform(-5.0, 5.0);
        pred.push_back(rec(f, id + 10, x + jitter, 50.0 * id, 40, 70));
      }
    }
  }
  const EvalReport base = evaluate(gt, pred);

  std::vector<MotRecord> relabeled = pred;
  for (auto& p : relabeled) p.id = 9000 - 7 * p.id;  // bijective rename
  const EvalReport renamed = evaluate(gt, relabeled);
  CHECK(renamed.idf1 == base.idf1);
  CHECK(renamed.mota == base.mota);
  CHECK(renamed.idsw == base.idsw);
}

TEST_CASE("evaluate: IDF1 equals the brute-force trajectory pairing on small instances") {
  SeededRng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n_gt = 1 + rng.uniform_index(5);
    const std::size_t n_pred = 1 + rng.uniform_index(5);
    std::vector<MotRecord> gt, pred;
    std::size_t gt_total = 0, pred_total = 0;
    for (std::size_t g = 0; g < n_gt; ++g)
      for (std::size_t f = 1; f <= 8; ++f) {
        if (rng.uniform() < 0.3) continue;
        gt.push_back(rec(f, static_cast<int>(g + 1), 120.0 * static_cast<double>(g), 100, 40, 70));
        ++gt_total;
      }
    if (gt.empty()) continue;
    for (std::size_t p = 0; p < n_pred; ++p)
      for (std::size_t f = 1; f <= 8; ++f) {
        if (rng.uniform() < 0.4) continue;
        const std::size_t near = rng.uniform_index(n_gt);
        pred.push_back(rec(f, static_cast<int>(p + 100),
                           120.0 * static_cast<double>(near) + rng.uniform(-8.0, 8.0), 100, 40,
                           70));
        ++pred_total;
      }

    const EvalReport report = evaluate(gt, pred);

    // oracle: exhaustive max-overlap pairing
    std::map<int, std::map<std::size_t, MotRecord>> gtr, ptr;
    for (const auto& r : gt) gtr[r.id][r.frame] = r;
    for (const auto& r : pred) ptr[r.id][r.frame] = r;
    Matrix overlap(gtr.size(), ptr.size());
    std::size_t i = 0;
    for (const auto& [gid, gmap] : gtr) {
      std::size_t j = 0;
      for (const auto& [pid, pmap] : ptr) {
        double count = 0.0;
        for (const auto& [f, grec] : gmap) {
          const auto it = pmap.find(f);
          if (it != pmap.end() &&
              iou(grec.box(1, 1), it->second.box(1, 1)) >= 0.5)
            count += 1.0;
        }
        overlap(i, j++) = count;
      }
      ++i;
    }
    const double idtp = testing::brute_force_idtp(overlap);
    const double idf1 =
        (2.0 * idtp) / static_cast<double>(gt_total + pred_total);
    CHECK(report.idf1 == doctest::Approx(idf1).epsilon(1e-12));
  }
}

TEST_CASE("evaluate: empty ground truth is an error") {
  CHECK_THROWS_AS(evaluate({}, four_frame_gt()), DataError);
}

TEST_CASE("load_config: defaults, overrides, constraint violations") {
  const RunConfig defaults = config_from_json_text("{}");
  CHECK(defaults.alpha == 0.7);
  REQUIRE(defaults.betas.size() == 2);
  CHECK(defaults.betas[0] == 0.2);
  CHECK(defaults.betas[1] == 0.1);
  CHECK(defaults.t_box == 0.1);
  CHECK(defaults.gamma == 0.8);
  CHECK(defaults.epsilon == 0.01);
  CHECK(defaults.p1 == 0.1);
  CHECK(defaults.lr_gnn == 2e-6);
  CHECK(defaults.max_age == 30);
  CHECK(defaults.memory == 6);
  CHECK(defaults.gnn_layers() == 2);

  const RunConfig valid = config_from_json_text(R"({"alpha": 0.5, "betas": [0.5]})");
  CHECK(valid.alpha == 0.5);
  CHECK(valid.gnn_layers() == 1);

  try {
    config_from_json_text(R"({"alpha": 0.5, "betas": [0.6]})");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("alpha") != std::string::npos);
    CHECK(msg.find("betas") != std::string::npos);
  }

  CHECK_THROWS_AS(config_from_json_text(R"({"unknown_knob": 3})"), DataError);
  CHECK_THROWS_AS(config_from_json_text("not json"), DataError);
  CHECK_THROWS_AS(config_from_json_text(R"({"strategy": "mystery"})"), DataError);
}

TEST_CASE("load_config: environment seed override applies only without an explicit seed") {
  setenv("TOPOTRACK_SEED", "424242", 1);
  CHECK(config_from_json_text("{}").seed == 424242);
  CHECK(config_from_json_text(R"({"seed": 5})").seed == 5);
  unsetenv("TOPOTRACK_SEED");
  CHECK(config_from_json_text("{}").seed == 7);
}
