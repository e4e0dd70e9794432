#pragma once

// Versioned plain-text checkpoints: config echo, featurizer hash
// constants, and all parameter arrays as decimal fp64 text (%.17g, which
// round-trips doubles exactly). Writes are atomic and byte-deterministic.

#include <filesystem>

#include "vareg/featurizer.hpp"
#include "vareg/model.hpp"

namespace vareg {

struct Checkpoint {
  ModelParams params;
  ModelConfig model;
  FeaturizerConfig featurizer;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p,
                     const ModelConfig& model_cfg,
                     const FeaturizerConfig& feat_cfg);

// Validates shapes against the echoed config, the hash constants against
// this build, and that every value is finite.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vareg
