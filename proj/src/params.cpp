#include "topotrack/params.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "topotrack/errors.hpp"
#include "topotrack/rng.hpp"

namespace topotrack {

TrackerModels init_models(const RunConfig& cfg) {
  cfg.validate();
  SeededRng rng(cfg.seed);
  TrackerModels models;
  models.edge_layer = FeedForwardLayer::random(1, 2 * cfg.descriptor_dim + 8,
                                               Activation::sigmoid, rng);
  const std::size_t layers = std::max<std::size_t>(cfg.gnn_layers(), 1);
  std::vector<std::size_t> dims(layers + 1, cfg.descriptor_dim);
  models.gnn = GcnStack::random(dims, cfg.gcn_relu, rng);
  models.matcher = AppearanceMatcher::random(cfg.descriptor_dim, cfg.matcher_hidden, rng);
  models.scorer = MotionScorer::random(cfg.motion_hidden, rng);
  return models;
}

namespace {

constexpr char kMagic[4] = {'T', 'T', 'P', 'R'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("model file: truncated");
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw DataError("model file: truncated");
  return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u64(out, m.rows());
  write_u64(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix read_matrix(std::istream& in) {
  const std::uint64_t rows = read_u64(in);
  const std::uint64_t cols = read_u64(in);
  if (rows > (1u << 20) || cols > (1u << 20)) throw DataError("model file: absurd matrix shape");
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data().data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw DataError("model file: truncated matrix payload");
  if (!m.all_finite()) throw DataError("model file: non-finite parameters");
  return m;
}

void write_layer(std::ostream& out, const FeedForwardLayer& layer) {
  write_u32(out, static_cast<std::uint32_t>(layer.activation));
  write_matrix(out, layer.weight);
  write_u64(out, layer.bias.size());
  out.write(reinterpret_cast<const char*>(layer.bias.data()),
            static_cast<std::streamsize>(layer.bias.size() * sizeof(double)));
}

FeedForwardLayer read_layer(std::istream& in) {
  FeedForwardLayer layer;
  const std::uint32_t act = read_u32(in);
  if (act > 2) throw DataError("model file: unknown activation code");
  layer.activation = static_cast<Activation>(act);
  layer.weight = read_matrix(in);
  const std::uint64_t bias_len = read_u64(in);
  if (bias_len != layer.weight.rows()) throw DataError("model file: bias/weight shape mismatch");
  layer.bias.resize(bias_len);
  in.read(reinterpret_cast<char*>(layer.bias.data()),
          static_cast<std::streamsize>(bias_len * sizeof(double)));
  if (!in) throw DataError("model file: truncated bias payload");
  return layer;
}

}  // namespace

void save_models(const TrackerModels& models, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_models: cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);

  write_layer(out, models.edge_layer);
  write_u32(out, static_cast<std::uint32_t>(models.gnn.layers()));
  write_u32(out, models.gnn.use_relu ? 1 : 0);
  for (const auto& w : models.gnn.weights) write_matrix(out, w);
  write_layer(out, models.matcher.hidden);
  write_layer(out, models.matcher.output);
  write_layer(out, models.scorer.cell);
  write_layer(out, models.scorer.score_head);
  write_layer(out, models.scorer.state_head);
  if (!out) throw DataError("save_models: write failed for " + path.string());
}

TrackerModels load_models(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_models: cannot open " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("load_models: not a model parameter file");
  const std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw DataError("load_models: unsupported version " + std::to_string(version));

  TrackerModels models;
  models.edge_layer = read_layer(in);
  const std::uint32_t layers = read_u32(in);
  models.gnn.use_relu = read_u32(in) != 0;
  for (std::uint32_t l = 0; l < layers; ++l) models.gnn.weights.push_back(read_matrix(in));

  models.matcher.hidden = read_layer(in);
  models.matcher.output = read_layer(in);
  models.scorer.cell = read_layer(in);
  models.scorer.score_head = read_layer(in);
  models.scorer.state_head = read_layer(in);

  // cross-model shape consistency
  const std::size_t f = models.matcher.descriptor_dim();
  if (models.matcher.hidden.in_dim() != 2 * f)
    throw DataError("load_models: matcher input dimension is odd");
  if (models.matcher.output.in_dim() != models.matcher.hidden.out_dim() ||
      models.matcher.output.out_dim() != 1)
    throw DataError("load_models: matcher layer chain mismatch");
  if (models.edge_layer.in_dim() != 2 * f + 8 || models.edge_layer.out_dim() != 1)
    throw DataError("load_models: edge layer dimensions inconsistent with descriptor size");
  if (models.gnn.layers() == 0) throw DataError("load_models: model file has no GCN layers");
  if (models.gnn.input_dim() != f)
    throw DataError("load_models: GCN input dimension inconsistent with descriptor size");
  for (std::size_t l = 1; l < models.gnn.layers(); ++l)
    if (models.gnn.weights[l].rows() != models.gnn.weights[l - 1].cols())
      throw DataError("load_models: GCN layer dimensions do not chain");
  const std::size_t h = models.scorer.hidden_dim();
  if (models.scorer.cell.in_dim() != 8 + h || models.scorer.cell.out_dim() != h ||
      models.scorer.score_head.in_dim() != h || models.scorer.score_head.out_dim() != 1 ||
      models.scorer.state_head.in_dim() != h)
    throw DataError("load_models: motion scorer dimensions do not chain");
  return models;
}

}  // namespace topotrack
