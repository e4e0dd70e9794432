#include "vareg/trainer.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "vareg/error.hpp"

namespace vareg {

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.accumulation_steps < 1 || cfg.max_epochs < 1 ||
      cfg.patience < 1) {
    throw ValidationError(
        "train: batch_size, accumulation_steps, max_epochs, patience must be >= 1");
  }
  validate(cfg.model);
  validate(cfg.featurizer);
  validate(cfg.optimizer);
}

namespace {

std::vector<EncodedInstance> encode_dataset(const Dataset& ds,
                                            const FeaturizerConfig& cfg,
                                            bool with_labels) {
  std::vector<EncodedInstance> out;
  out.reserve(ds.size());
  for (const auto& inst : ds.instances) {
    EncodedInstance enc;
    enc.feats = encode_pair(inst.text, inst.aspect, cfg);
    if (with_labels) {
      enc.valence = *inst.valence;
      enc.arousal = *inst.arousal;
    }
    out.push_back(std::move(enc));
  }
  return out;
}

MetricsReport evaluate_encoded(const ModelParams& params,
                               std::span<const EncodedInstance> encoded) {
  std::vector<VA> preds, golds;
  preds.reserve(encoded.size());
  golds.reserve(encoded.size());
  for (const auto& enc : encoded) {
    const auto act = forward(params, enc.feats, false, nullptr, 0.0);
    preds.push_back({act.y_v, act.y_a});
    golds.push_back({enc.valence, enc.arousal});
  }
  return compute_metrics(preds, golds);
}

void accumulate(Gradients& acc, const Gradients& g, double weight) {
  auto as = param_slots(acc);
  const auto gs = param_slots(g);
  for (std::size_t s = 0; s < as.size(); ++s) {
    for (std::ptrdiff_t i = 0; i < as[s].size; ++i) {
      as[s].data[i] += weight * gs[s].data[i];
    }
  }
}

void scale(Gradients& g, double factor) {
  for (auto& slot : param_slots(g)) {
    for (std::ptrdiff_t i = 0; i < slot.size; ++i) slot.data[i] *= factor;
  }
}

}  // namespace

RunArtifacts train(const TrainConfig& cfg, const Dataset& train_ds,
                   const Dataset& dev_ds) {
  validate(cfg);
  if (train_ds.instances.empty() || dev_ds.instances.empty() ||
      !train_ds.fully_labeled() || !dev_ds.fully_labeled()) {
    throw ValidationError("train: train and dev must be labeled and nonempty");
  }

  const auto train_enc = encode_dataset(train_ds, cfg.featurizer, true);
  const auto dev_enc = encode_dataset(dev_ds, cfg.featurizer, true);
  const std::size_t n = train_enc.size();
  const std::size_t group_size =
      static_cast<std::size_t>(cfg.batch_size) *
      static_cast<std::size_t>(cfg.accumulation_steps);
  const long steps_per_epoch =
      static_cast<long>((n + group_size - 1) / group_size);
  const long total_steps = steps_per_epoch * cfg.max_epochs;

  ModelParams params =
      init_params(cfg.model, cfg.featurizer, derive_seed(cfg.seed, "init"));
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  OptimizerState opt = init_optimizer(params);

  RunArtifacts run;
  run.seed = cfg.seed;
  run.loss_mode = cfg.loss_mode;
  EarlyStopper stopper(cfg.patience);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<EncodedInstance> shuffled(n);
  long global_step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = train_enc[order[i]];

    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    std::size_t pos = 0;
    while (pos < n) {
      // one optimizer step: up to accumulation_steps micro-batches,
      // instance-weighted so the group gradient equals the gradient of
      // the mean loss over the whole group
      Gradients acc = zero_like(params);
      double loss_v = 0.0, loss_a = 0.0, group_total = 0.0;
      std::size_t group_count = 0;
      for (int micro = 0; micro < cfg.accumulation_steps && pos < n; ++micro) {
        const std::size_t take =
            std::min(static_cast<std::size_t>(cfg.batch_size), n - pos);
        const std::span<const EncodedInstance> batch(&shuffled[pos], take);
        pos += take;
        BatchGradients bg;
        try {
          bg = backward(params, batch, cfg.loss_mode, cfg.model.dropout_rate,
                        &dropout_rng);
        } catch (const NumericError& e) {
          std::ostringstream os;
          os << "train: " << e.what() << " at optimizer step "
             << global_step + 1 << " (epoch " << epoch << ")";
          throw NumericError(os.str());
        }
        const auto w = static_cast<double>(bg.count);
        accumulate(acc, bg.grads, w);
        loss_v += bg.losses.valence * w;
        loss_a += bg.losses.arousal * w;
        group_count += bg.count;
      }
      scale(acc, 1.0 / static_cast<double>(group_count));
      const TaskLosses group_losses{loss_v / static_cast<double>(group_count),
                                    loss_a / static_cast<double>(group_count)};
      group_total =
          cfg.loss_mode == LossMode::uncertainty
              ? uncertainty_loss(group_losses, params.logvar_v, params.logvar_a)
                    .total
              : fixed_loss(group_losses);
      ++global_step;
      if (!std::isfinite(group_total)) {
        std::ostringstream os;
        os << "train: non-finite loss at optimizer step " << global_step
           << " (epoch " << epoch << ")";
        throw NumericError(os.str());
      }
      clip_gradients(acc, cfg.optimizer.clip_norm);
      adam_step(opt, params, acc, cfg.optimizer, global_step, total_steps);
      epoch_loss += group_total * static_cast<double>(group_count);
      epoch_count += group_count;
    }

    const MetricsReport dev = evaluate_encoded(params, dev_enc);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(epoch_count);
    rec.dev_joint_rmse = dev.joint_rmse;
    rec.dev_rmse_v = dev.rmse_v;
    rec.dev_rmse_a = dev.rmse_a;
    rec.dev_pcc_v = dev.pcc_v;
    rec.dev_pcc_a = dev.pcc_a;
    rec.logvar_v = params.logvar_v;
    rec.logvar_a = params.logvar_a;
    run.history.push_back(rec);

    if (stopper.observe(dev.joint_rmse)) {
      run.best_params = params;
      run.best_epoch = epoch;
    }
    run.stopped_epoch = epoch;
    if (stopper.should_stop()) break;
  }
  run.best_dev_rmse = stopper.best_value();
  return run;
}

MetricsReport evaluate(const ModelParams& params,
                       const FeaturizerConfig& feat_cfg, const Dataset& ds) {
  if (ds.instances.empty() || !ds.fully_labeled()) {
    throw ValidationError("evaluate: requires a labeled, nonempty dataset");
  }
  return evaluate_encoded(params, encode_dataset(ds, feat_cfg, true));
}

std::vector<Prediction> predict(const ModelParams& params,
                                const FeaturizerConfig& feat_cfg,
                                const Dataset& ds) {
  std::vector<Prediction> preds;
  preds.reserve(ds.size());
  for (const auto& inst : ds.instances) {
    const auto feats = encode_pair(inst.text, inst.aspect, feat_cfg);
    const auto act = forward(params, feats, false, nullptr, 0.0);
    preds.push_back({inst.id, {act.y_v, act.y_a}});
  }
  return preds;
}

std::vector<RunArtifacts> run_seeds(const TrainConfig& base,
                                    std::span<const std::uint64_t> seeds,
                                    const Dataset& train_ds,
                                    const Dataset& dev_ds) {
  if (seeds.empty()) throw ValidationError("run_seeds: no seeds given");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) {
    throw ValidationError("run_seeds: duplicate seeds");
  }
  std::vector<RunArtifacts> runs;
  runs.reserve(seeds.size());
  for (const auto seed : seeds) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    runs.push_back(train(cfg, train_ds, dev_ds));
  }
  return runs;
}

SigmaSource sigma_source(const RunArtifacts& run, const std::string& name) {
  return {name, run.seed, run.best_params.logvar_v, run.best_params.logvar_a,
          run.loss_mode};
}

}  // namespace vareg
