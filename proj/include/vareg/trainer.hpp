#pragma once

// Training loop: seeded shuffles, gradient accumulation, per-epoch dev
// evaluation, early stopping with best-checkpoint restore, and sigma
// trajectory logging.
//
// Determinism contract: a run is a pure function of (config, data, seed).
// Three RNG streams are derived from the run seed with fixed labels --
// "init" (parameter init), "shuffle" (epoch shuffles), "dropout" (masks,
// consumed per instance in shuffle order) -- so e.g. changing max_epochs
// never perturbs initialization, and accumulation boundaries never
// perturb dropout.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vareg/corpus.hpp"
#include "vareg/featurizer.hpp"
#include "vareg/metrics.hpp"
#include "vareg/model.hpp"
#include "vareg/optimizer.hpp"

namespace vareg {

struct TrainConfig {
  int batch_size = 16;
  int accumulation_steps = 4;  // effective batch = batch_size * accumulation
  int max_epochs = 25;
  int patience = 3;
  std::uint64_t seed = 42;
  LossMode loss_mode = LossMode::uncertainty;
  ModelConfig model;
  FeaturizerConfig featurizer;
  OptimizerConfig optimizer;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_joint_rmse = 0.0;
  double dev_rmse_v = 0.0;
  double dev_rmse_a = 0.0;
  std::optional<double> dev_pcc_v;
  std::optional<double> dev_pcc_a;
  double logvar_v = 0.0;  // values after this epoch
  double logvar_a = 0.0;
};

struct RunArtifacts {
  ModelParams best_params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;     // epoch whose checkpoint was restored
  int stopped_epoch = 0;  // epochs actually run
  double best_dev_rmse = 0.0;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::uncertainty;
};

// Stops after `patience` epochs without strict improvement; ties keep the
// earlier epoch.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  // Returns true when this epoch is a new best.
  bool observe(double value) {
    ++epoch_;
    if (epoch_ == 1 || value < best_) {
      best_ = value;
      best_epoch_ = epoch_;
      since_best_ = 0;
      return true;
    }
    ++since_best_;
    return false;
  }

  bool should_stop() const { return since_best_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int since_best_ = 0;
  double best_ = 0.0;
};

RunArtifacts train(const TrainConfig& cfg, const Dataset& train_ds,
                   const Dataset& dev_ds);

// Eval-mode metrics (no dropout, no clamping).
MetricsReport evaluate(const ModelParams& params,
                       const FeaturizerConfig& feat_cfg, const Dataset& ds);

// Raw eval-mode predictions in dataset order; clamping happens only at
// serialization.
std::vector<Prediction> predict(const ModelParams& params,
                                const FeaturizerConfig& feat_cfg,
                                const Dataset& ds);

// Independent runs differing only in seed, returned in seed order.
std::vector<RunArtifacts> run_seeds(const TrainConfig& base,
                                    std::span<const std::uint64_t> seeds,
                                    const Dataset& train_ds,
                                    const Dataset& dev_ds);

SigmaSource sigma_source(const RunArtifacts& run, const std::string& name);

}  // namespace vareg
