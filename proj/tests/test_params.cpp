#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "topotrack/errors.hpp"
#include "topotrack/params.hpp"

using namespace topotrack;

TEST_CASE("model parameters: save/load round-trip is exact") {
  RunConfig cfg;
  cfg.descriptor_dim = 6;
  cfg.matcher_hidden = 10;
  cfg.motion_hidden = 12;
  cfg.seed = 31;
  const TrackerModels models = init_models(cfg);

  const auto path = std::filesystem::temp_directory_path() / "topotrack_model.bin";
  save_models(models, path);
  const TrackerModels loaded = load_models(path);

  CHECK(loaded.edge_layer.weight == models.edge_layer.weight);
  CHECK(loaded.edge_layer.bias == models.edge_layer.bias);
  CHECK(loaded.gnn.layers() == models.gnn.layers());
  for (std::size_t l = 0; l < models.gnn.layers(); ++l)
    CHECK(loaded.gnn.weights[l] == models.gnn.weights[l]);
  CHECK(loaded.matcher.hidden.weight == models.matcher.hidden.weight);
  CHECK(loaded.matcher.output.bias == models.matcher.output.bias);
  CHECK(loaded.scorer.cell.weight == models.scorer.cell.weight);
  CHECK(loaded.scorer.state_head.weight == models.scorer.state_head.weight);
}

TEST_CASE("model parameters: same seed initializes identical models") {
  RunConfig cfg;
  cfg.seed = 5;
  const TrackerModels a = init_models(cfg);
  const TrackerModels b = init_models(cfg);
  CHECK(a.matcher.hidden.weight == b.matcher.hidden.weight);
  CHECK(a.gnn.weights[0] == b.gnn.weights[0]);

  cfg.seed = 6;
  const TrackerModels c = init_models(cfg);
  CHECK(!(c.matcher.hidden.weight == a.matcher.hidden.weight));
}

TEST_CASE("model parameters: corrupted files are rejected") {
  const auto path = std::filesystem::temp_directory_path() / "topotrack_badmodel.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a model file";
  }
  CHECK_THROWS_AS(load_models(path), DataError);
  CHECK_THROWS_AS(load_models("/nonexistent/model.bin"), DataError);

  // truncation is caught
  RunConfig cfg;
  const auto good = std::filesystem::temp_directory_path() / "topotrack_goodmodel.bin";
  save_models(init_models(cfg), good);
  const auto truncated = std::filesystem::temp_directory_path() / "topotrack_trunc.bin";
  {
    std::ifstream in(good, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    std::ofstream out(truncated, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(load_models(truncated), DataError);
}
