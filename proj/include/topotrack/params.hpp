#pragma once

#include <filesystem>

#include "topotrack/assoc.hpp"
#include "topotrack/motio.hpp"

namespace topotrack {

/// Deterministic model initialization from the config seed. Draw order is
/// fixed: edge layer, GCN stack, matcher, motion scorer.
TrackerModels init_models(const RunConfig& cfg);

/// Versioned binary parameter file holding all four models; shapes are
/// validated against each other on load.
void save_models(const TrackerModels& models, const std::filesystem::path& path);
TrackerModels load_models(const std::filesystem::path& path);

}  // namespace topotrack
