#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "vareg/checkpoint.hpp"
#include "vareg/error.hpp"
#include "vareg/trainer.hpp"

using namespace vareg;
using vareg::testutil::TempDir;

namespace {

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.model.embed_dim = 8;
  cfg.model.hidden_dim = 12;
  cfg.featurizer.bucket_count = 256;
  cfg.featurizer.word_ngram_max = 1;
  cfg.optimizer.model_lr = 0.02;
  cfg.optimizer.sigma_warmup = false;
  cfg.max_epochs = 6;
  return cfg;
}

std::pair<Dataset, Dataset> tiny_corpus(int n, std::uint64_t seed) {
  SynthSpec spec;
  spec.vocab_size = 30;
  spec.n_instances = n;
  spec.seed = seed;
  spec.valence_noise_sd = 0.1;
  spec.arousal_noise_sd = 0.3;
  return split_dataset(generate_synthetic(spec), 0.2, 1);
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  const auto sa = param_slots(a);
  const auto sb = param_slots(b);
  for (std::size_t s = 0; s < sa.size(); ++s) {
    if (sa[s].size != sb[s].size) return false;
    for (std::ptrdiff_t i = 0; i < sa[s].size; ++i) {
      if (sa[s].data[i] != sb[s].data[i]) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("EarlyStopper follows the patience-3 trace") {
  // dev RMSE 1.0, 0.9, 0.95, 0.96, 0.97 -> stop after epoch 5, keep epoch 2
  EarlyStopper st(3);
  CHECK(st.observe(1.0));
  CHECK_FALSE(st.should_stop());
  CHECK(st.observe(0.9));
  CHECK_FALSE(st.should_stop());
  CHECK_FALSE(st.observe(0.95));
  CHECK_FALSE(st.should_stop());
  CHECK_FALSE(st.observe(0.96));
  CHECK_FALSE(st.should_stop());
  CHECK_FALSE(st.observe(0.97));
  CHECK(st.should_stop());
  CHECK(st.best_epoch() == 2);
  CHECK(st.best_value() == 0.9);
}

TEST_CASE("EarlyStopper keeps the earlier epoch on ties") {
  EarlyStopper st(3);
  st.observe(1.0);
  CHECK_FALSE(st.observe(1.0));
  CHECK(st.best_epoch() == 1);
}

TEST_CASE("evaluate: a memorized single instance scores zero") {
  FeaturizerConfig fc;
  fc.bucket_count = 64;
  ModelConfig mc;
  mc.embed_dim = 4;
  mc.hidden_dim = 4;
  auto p = init_params(mc, fc, 1);
  for (auto& slot : param_slots(p)) {
    for (std::ptrdiff_t i = 0; i < slot.size; ++i) slot.data[i] = 0.0;
  }
  p.head_v_b = 6.25;
  p.head_a_b = 3.5;
  Dataset ds;
  ds.instances.push_back({"a", "some text", "aspect", 6.25, 3.5});
  const auto rep = evaluate(p, fc, ds);
  CHECK(rep.joint_rmse == 0.0);
  CHECK(rep.n == 1);

  Dataset unlabeled;
  unlabeled.instances.push_back({"a", "t", "", std::nullopt, std::nullopt});
  CHECK_THROWS_AS(evaluate(p, fc, unlabeled), ValidationError);
}

TEST_CASE("evaluate satisfies the joint identity and is deterministic") {
  const auto [train_ds, dev_ds] = tiny_corpus(60, 3);
  TrainConfig cfg = tiny_config();
  const auto p = init_params(cfg.model, cfg.featurizer, 5);
  const auto a = evaluate(p, cfg.featurizer, dev_ds);
  const auto b = evaluate(p, cfg.featurizer, dev_ds);
  CHECK(a.joint_rmse == b.joint_rmse);
  CHECK(a.rmse_v == b.rmse_v);
  CHECK(std::abs(a.joint_rmse * a.joint_rmse -
                 (a.rmse_v * a.rmse_v + a.rmse_a * a.rmse_a)) < 1e-12);
}

TEST_CASE("predict preserves order and feeds the wire format") {
  const auto [train_ds, dev_ds] = tiny_corpus(40, 9);
  TrainConfig cfg = tiny_config();
  const auto p = init_params(cfg.model, cfg.featurizer, 5);

  const Dataset empty;
  CHECK(predict(p, cfg.featurizer, empty).empty());

  const auto preds = predict(p, cfg.featurizer, dev_ds);
  REQUIRE(preds.size() == dev_ds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].id == dev_ds.instances[i].id);
  }
  TempDir tmp;
  write_predictions(tmp.file("p.tsv"), preds);
  const auto back = read_predictions(tmp.file("p.tsv"));
  REQUIRE(back.size() == preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(back[i].id == preds[i].id);
    CHECK(back[i].va.v >= 1.0);
    CHECK(back[i].va.v <= 9.0);
  }
}

TEST_CASE("train is bitwise deterministic per seed") {
  const auto [train_ds, dev_ds] = tiny_corpus(120, 11);
  TrainConfig cfg = tiny_config();
  cfg.seed = 42;
  const auto a = train(cfg, train_ds, dev_ds);
  const auto b = train(cfg, train_ds, dev_ds);
  CHECK(params_equal(a.best_params, b.best_params));
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].dev_joint_rmse == b.history[i].dev_joint_rmse);
    CHECK(a.history[i].logvar_v == b.history[i].logvar_v);
  }
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("stream separation: max_epochs does not perturb early epochs") {
  // the warmup schedule is the only coupling to total_steps, so with it
  // off, epoch histories must be identical prefixes across epoch budgets
  const auto [train_ds, dev_ds] = tiny_corpus(80, 31);
  TrainConfig cfg = tiny_config();
  cfg.seed = 42;
  cfg.optimizer.warmup_fraction = 0.0;
  cfg.max_epochs = 2;
  const auto a = train(cfg, train_ds, dev_ds);
  cfg.max_epochs = 5;
  const auto b = train(cfg, train_ds, dev_ds);
  REQUIRE(a.history.size() == 2);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].dev_joint_rmse == b.history[i].dev_joint_rmse);
    CHECK(a.history[i].logvar_v == b.history[i].logvar_v);
  }
}

TEST_CASE("restored checkpoint achieves the recorded best dev RMSE") {
  const auto [train_ds, dev_ds] = tiny_corpus(120, 13);
  TrainConfig cfg = tiny_config();
  cfg.seed = 7;
  const auto run = train(cfg, train_ds, dev_ds);
  REQUIRE(run.best_epoch >= 1);
  double min_hist = run.history.front().dev_joint_rmse;
  for (const auto& rec : run.history) {
    min_hist = std::min(min_hist, rec.dev_joint_rmse);
    CHECK(std::isfinite(rec.logvar_v));
    CHECK(std::isfinite(rec.logvar_a));
    CHECK(std::exp(rec.logvar_v) > 0.0);
  }
  CHECK(run.best_dev_rmse == min_hist);
  const auto rescored = evaluate(run.best_params, cfg.featurizer, dev_ds);
  CHECK(rescored.joint_rmse == run.best_dev_rmse);
  CHECK(run.history.size() == static_cast<std::size_t>(run.stopped_epoch));
}

TEST_CASE("accumulated micro-batches equal one large batch") {
  // n = 100 exercises both a partial micro-batch and a partial group
  const auto [train_ds, dev_ds] = tiny_corpus(125, 17);
  REQUIRE(train_ds.size() == 100);
  TrainConfig small = tiny_config();
  small.batch_size = 16;
  small.accumulation_steps = 4;
  small.max_epochs = 2;
  small.seed = 3;
  TrainConfig big = small;
  big.batch_size = 64;
  big.accumulation_steps = 1;
  const auto a = train(small, train_ds, dev_ds);
  const auto b = train(big, train_ds, dev_ds);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const double rel =
        std::abs(a.history[i].train_loss - b.history[i].train_loss) /
        std::abs(b.history[i].train_loss);
    CHECK(rel < 1e-6);
    CHECK(std::abs(a.history[i].dev_joint_rmse - b.history[i].dev_joint_rmse) <
          1e-6);
  }
}

TEST_CASE("train validates inputs and flags divergence with the step") {
  const auto [train_ds, dev_ds] = tiny_corpus(40, 19);
  TrainConfig cfg = tiny_config();

  Dataset unlabeled;
  unlabeled.instances.push_back({"a", "t", "", std::nullopt, std::nullopt});
  CHECK_THROWS_AS(train(cfg, unlabeled, dev_ds), ValidationError);
  CHECK_THROWS_AS(train(cfg, Dataset{}, dev_ds), ValidationError);

  TrainConfig diverging = cfg;
  diverging.optimizer.model_lr = 1e200;
  diverging.optimizer.clip_norm = 1e300;
  diverging.optimizer.warmup_fraction = 0.0;
  diverging.max_epochs = 25;
  CHECK_THROWS_WITH_AS(train(diverging, train_ds, dev_ds),
                       doctest::Contains("step"), NumericError);
}

TEST_CASE("run_seeds returns independent runs in seed order") {
  const auto [train_ds, dev_ds] = tiny_corpus(80, 23);
  TrainConfig cfg = tiny_config();
  cfg.max_epochs = 3;
  const std::vector<std::uint64_t> seeds{21, 99, 42};
  const auto runs = run_seeds(cfg, seeds, train_ds, dev_ds);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].seed == 21);
  CHECK(runs[2].seed == 42);

  // order independence
  const std::vector<std::uint64_t> reversed{42, 99, 21};
  const auto rruns = run_seeds(cfg, reversed, train_ds, dev_ds);
  CHECK(params_equal(runs[0].best_params, rruns[2].best_params));
  CHECK(params_equal(runs[2].best_params, rruns[0].best_params));

  const std::vector<std::uint64_t> dup{21, 21};
  CHECK_THROWS_AS(run_seeds(cfg, dup, train_ds, dev_ds), ValidationError);
  CHECK_THROWS_AS(
      run_seeds(cfg, std::vector<std::uint64_t>{}, train_ds, dev_ds),
      ValidationError);

  // one seed: the ensemble degenerates to that single run
  const auto one =
      run_seeds(cfg, std::vector<std::uint64_t>{42}, train_ds, dev_ds);
  CHECK(params_equal(one[0].best_params, runs[2].best_params));
}

TEST_CASE("training reduces dev RMSE on a clean synthetic corpus") {
  SynthSpec spec;
  spec.vocab_size = 30;
  spec.n_instances = 400;
  spec.seed = 7;
  const auto [train_ds, dev_ds] =
      split_dataset(generate_synthetic(spec), 0.2, 1);
  TrainConfig cfg = tiny_config();
  cfg.max_epochs = 10;
  cfg.seed = 42;
  const auto run = train(cfg, train_ds, dev_ds);
  CHECK(run.best_dev_rmse < 1.0);
  CHECK(run.best_dev_rmse < run.history.front().dev_joint_rmse);
}

TEST_CASE("checkpoints round-trip bitwise") {
  TempDir tmp;
  TrainConfig cfg = tiny_config();
  const auto p = init_params(cfg.model, cfg.featurizer, 77);
  save_checkpoint(tmp.file("ck.txt"), p, cfg.model, cfg.featurizer);
  const auto ck = load_checkpoint(tmp.file("ck.txt"));
  CHECK(params_equal(p, ck.params));
  CHECK(ck.model.embed_dim == cfg.model.embed_dim);
  CHECK(ck.featurizer.bucket_count == cfg.featurizer.bucket_count);
  CHECK(ck.featurizer.hash_seed == cfg.featurizer.hash_seed);

  // byte determinism
  save_checkpoint(tmp.file("ck2.txt"), p, cfg.model, cfg.featurizer);
  CHECK(testutil::read_file(tmp.file("ck.txt")) ==
        testutil::read_file(tmp.file("ck2.txt")));

  // tampering with the shape header fails validation
  auto text = testutil::read_file(tmp.file("ck.txt"));
  const auto pos = text.find("model.hidden_dim 12");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 19, "model.hidden_dim 16");
  testutil::write_file(tmp.file("bad.txt"), text);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("bad.txt")), ValidationError);

  testutil::write_file(tmp.file("junk.txt"), "not a checkpoint\n");
  CHECK_THROWS_AS(load_checkpoint(tmp.file("junk.txt")), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(tmp.file("missing.txt")), ValidationError);
}

TEST_CASE("sigma_source carries the run mode") {
  const auto [train_ds, dev_ds] = tiny_corpus(60, 29);
  TrainConfig cfg = tiny_config();
  cfg.max_epochs = 2;
  cfg.loss_mode = LossMode::fixed;
  const auto run = train(cfg, train_ds, dev_ds);
  const auto src = sigma_source(run, "fixed-run");
  CHECK(src.mode == LossMode::fixed);
  CHECK_THROWS_AS(sigma_report(std::vector<SigmaSource>{src}),
                  ValidationError);
}
