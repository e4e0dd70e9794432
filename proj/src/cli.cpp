#include "vareg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vareg/checkpoint.hpp"
#include "vareg/config.hpp"
#include "vareg/corpus.hpp"
#include "vareg/error.hpp"
#include "vareg/metrics.hpp"
#include "vareg/trainer.hpp"

namespace vareg {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

std::uint64_t file_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(x));
  return buf;
}

json metrics_to_json(const MetricsReport& r) {
  json j;
  j["n"] = r.n;
  j["joint_rmse"] = r.joint_rmse;
  j["rmse_v"] = r.rmse_v;
  j["rmse_a"] = r.rmse_a;
  j["pcc_v"] = r.pcc_v ? json(*r.pcc_v) : json(nullptr);
  j["pcc_a"] = r.pcc_a ? json(*r.pcc_a) : json(nullptr);
  j["gap"] = r.gap ? json(*r.gap) : json(nullptr);
  return j;
}

void print_metrics(std::ostream& out, const std::string& name,
                   const MetricsReport& r) {
  out << std::left << std::setw(18) << name << std::right << std::fixed
      << std::setprecision(3) << "  joint " << r.joint_rmse << "  rmse_v "
      << r.rmse_v << "  rmse_a " << r.rmse_a;
  if (r.pcc_v && r.pcc_a) {
    out << "  pcc_v " << *r.pcc_v << "  pcc_a " << *r.pcc_a << "  gap "
        << *r.gap;
  }
  out << "  n " << r.n << "\n";
  out.unsetf(std::ios::floatfield);
}

// ---- gen ----------------------------------------------------------------

struct GenOptions {
  std::string out_path;
  int n = 0;
  std::uint64_t seed = 0;
  int vocab = 200;
  int min_tokens = 5;
  int max_tokens = 15;
  double valence_noise = 0.0;
  double arousal_noise = 0.0;
  double dev_fraction = 0.0;
  std::uint64_t split_seed = 1;
  std::string train_out;
  std::string dev_out;
};

int cmd_gen(const GenOptions& opt, std::ostream& out) {
  SynthSpec spec;
  spec.vocab_size = opt.vocab;
  spec.min_tokens_per_text = opt.min_tokens;
  spec.max_tokens_per_text = opt.max_tokens;
  spec.valence_noise_sd = opt.valence_noise;
  spec.arousal_noise_sd = opt.arousal_noise;
  spec.n_instances = opt.n;
  spec.seed = opt.seed;
  const Dataset ds = generate_synthetic(spec);
  save_dataset(ds, opt.out_path);
  out << "wrote " << ds.size() << " instances to " << opt.out_path << "\n";
  if (opt.dev_fraction > 0.0) {
    if (opt.train_out.empty() || opt.dev_out.empty()) {
      throw ValidationError("--dev-fraction needs --train-out and --dev-out");
    }
    const auto [train, dev] = split_dataset(ds, opt.dev_fraction, opt.split_seed);
    save_dataset(train, opt.train_out);
    save_dataset(dev, opt.dev_out);
    out << "split: " << train.size() << " train -> " << opt.train_out << ", "
        << dev.size() << " dev -> " << opt.dev_out << "\n";
  }
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

json run_summary(const RunArtifacts& run, const std::string& run_name,
                 const std::string& cfg_hash, std::uint64_t data_fp,
                 std::size_t dev_n) {
  const auto& best = run.history.at(static_cast<std::size_t>(run.best_epoch) - 1);
  json j;
  j["run"] = run_name;
  j["seed"] = run.seed;
  j["loss_mode"] =
      run.loss_mode == LossMode::uncertainty ? "uncertainty" : "fixed";
  j["config_hash"] = cfg_hash;
  j["data_fingerprint"] = hex64(data_fp);
  j["best_epoch"] = run.best_epoch;
  j["stopped_epoch"] = run.stopped_epoch;
  json dev;
  dev["n"] = dev_n;
  dev["joint_rmse"] = run.best_dev_rmse;
  dev["rmse_v"] = best.dev_rmse_v;
  dev["rmse_a"] = best.dev_rmse_a;
  dev["pcc_v"] = best.dev_pcc_v ? json(*best.dev_pcc_v) : json(nullptr);
  dev["pcc_a"] = best.dev_pcc_a ? json(*best.dev_pcc_a) : json(nullptr);
  j["dev"] = dev;
  json sigma;
  sigma["logvar_v"] = run.best_params.logvar_v;
  sigma["logvar_a"] = run.best_params.logvar_a;
  sigma["var_v"] = std::exp(run.best_params.logvar_v);
  sigma["var_a"] = std::exp(run.best_params.logvar_a);
  sigma["ratio_v_a"] =
      std::exp(run.best_params.logvar_v - run.best_params.logvar_a);
  j["sigma"] = sigma;
  return j;
}

void write_history(const std::filesystem::path& path,
                   const RunArtifacts& run) {
  std::string body;
  for (const auto& rec : run.history) {
    json j;
    j["epoch"] = rec.epoch;
    j["train_loss"] = rec.train_loss;
    j["dev_joint_rmse"] = rec.dev_joint_rmse;
    j["dev_rmse_v"] = rec.dev_rmse_v;
    j["dev_rmse_a"] = rec.dev_rmse_a;
    j["dev_pcc_v"] = rec.dev_pcc_v ? json(*rec.dev_pcc_v) : json(nullptr);
    j["dev_pcc_a"] = rec.dev_pcc_a ? json(*rec.dev_pcc_a) : json(nullptr);
    body += j.dump();
    body += '\n';
  }
  atomic_write(path, body);
}

void write_sigma_trajectory(const std::filesystem::path& path,
                            const RunArtifacts& run) {
  std::string body;
  for (const auto& rec : run.history) {
    json j;
    j["epoch"] = rec.epoch;
    j["logvar_v"] = rec.logvar_v;
    j["logvar_a"] = rec.logvar_a;
    j["var_v"] = std::exp(rec.logvar_v);
    j["var_a"] = std::exp(rec.logvar_a);
    body += j.dump();
    body += '\n';
  }
  atomic_write(path, body);
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides,
              const std::string& out_dir_flag, std::ostream& out) {
  KeyValues kv = KeyValues::parse_file(config_path);
  for (const auto& pair : overrides) kv.set_pair(pair);
  if (!out_dir_flag.empty()) kv.set("out.dir", out_dir_flag);
  const ExperimentConfig ec = experiment_from_keyvalues(kv);
  const std::string cfg_hash = config_hash_hex(kv);

  const Dataset train_ds = load_dataset(ec.train_path, true);
  const Dataset dev_ds = load_dataset(ec.dev_path, true);
  const std::uint64_t data_fp =
      fnv1a64(hex64(file_fingerprint(ec.train_path)) +
              hex64(file_fingerprint(ec.dev_path)));

  std::filesystem::create_directories(ec.out_dir);
  const auto runs = run_seeds(ec.train, ec.seeds, train_ds, dev_ds);

  json agg;
  agg["config_hash"] = cfg_hash;
  agg["config"] = kv.canonical();
  agg["runs"] = json::array();
  std::vector<std::vector<Prediction>> dev_preds;
  out << "run summary (config " << cfg_hash << ")\n";
  for (const auto& run : runs) {
    const std::string run_name =
        "run-" + cfg_hash.substr(0, 12) + "-s" + std::to_string(run.seed);
    const auto run_dir = ec.out_dir / run_name;
    std::filesystem::create_directories(run_dir);
    save_checkpoint(run_dir / "checkpoint.txt", run.best_params,
                    ec.train.model, ec.train.featurizer);
    write_history(run_dir / "history.jsonl", run);
    write_sigma_trajectory(run_dir / "sigma.jsonl", run);
    const json summary =
        run_summary(run, run_name, cfg_hash, data_fp, dev_ds.size());
    atomic_write(run_dir / "summary.json", summary.dump(2) + "\n");
    agg["runs"].push_back(summary);
    dev_preds.push_back(predict(run.best_params, ec.train.featurizer, dev_ds));
    out << "  seed " << std::setw(6) << run.seed << "  best epoch "
        << std::setw(3) << run.best_epoch << "/" << run.stopped_epoch
        << "  dev joint RMSE " << std::fixed << std::setprecision(4)
        << run.best_dev_rmse;
    if (run.loss_mode == LossMode::uncertainty) {
      out << "  var_v " << std::exp(run.best_params.logvar_v) << "  var_a "
          << std::exp(run.best_params.logvar_a);
    }
    out << "\n";
    out.unsetf(std::ios::floatfield);
  }

  // seed-mean ensemble on dev
  const auto ens = ensemble_mean(dev_preds);
  std::vector<VA> ens_va, gold_va;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    ens_va.push_back(ens[i].va);
    gold_va.push_back(
        {*dev_ds.instances[i].valence, *dev_ds.instances[i].arousal});
  }
  const auto ens_report = compute_metrics(ens_va, gold_va);
  agg["ensemble_dev"] = metrics_to_json(ens_report);
  out << "  ensemble (" << runs.size() << " seeds)  dev joint RMSE "
      << std::fixed << std::setprecision(4) << ens_report.joint_rmse << "\n";
  out.unsetf(std::ios::floatfield);

  atomic_write(ec.out_dir / ("summary-" + cfg_hash.substr(0, 12) + ".json"),
               agg.dump(2) + "\n");
  return kExitOk;
}

// ---- predict / ensemble / eval ---------------------------------------------

int cmd_predict(const std::string& ckpt_path, const std::string& data_path,
                const std::string& out_path, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const Dataset ds = load_dataset(data_path, false);
  const auto preds = predict(ck.params, ck.featurizer, ds);
  write_predictions(out_path, preds);
  out << "wrote " << preds.size() << " predictions to " << out_path << "\n";
  return kExitOk;
}

int cmd_ensemble(const std::vector<std::string>& inputs,
                 const std::string& out_path, std::ostream& out) {
  std::vector<std::vector<Prediction>> runs;
  runs.reserve(inputs.size());
  for (const auto& path : inputs) runs.push_back(read_predictions(path));
  const auto mean = ensemble_mean(runs);
  write_predictions(out_path, mean);
  out << "wrote ensemble of " << runs.size() << " files to " << out_path
      << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path,
             const std::string& name, const std::string& record_path,
             std::ostream& out) {
  const Dataset gold = load_dataset(gold_path, true);
  const auto preds = read_predictions(pred_path);
  if (preds.size() != gold.size()) {
    throw ValidationError("eval: gold has " + std::to_string(gold.size()) +
                          " instances but predictions have " +
                          std::to_string(preds.size()));
  }
  std::vector<VA> pv, gv;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].id != gold.instances[i].id) {
      throw ValidationError("eval: id mismatch at position " +
                            std::to_string(i) + " ('" + preds[i].id +
                            "' vs '" + gold.instances[i].id + "')");
    }
    pv.push_back(preds[i].va);
    gv.push_back({*gold.instances[i].valence, *gold.instances[i].arousal});
  }
  const auto report = compute_metrics(pv, gv);
  print_metrics(out, name, report);
  if (!record_path.empty()) {
    json j = metrics_to_json(report);
    j["name"] = name;
    atomic_write(record_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

// ---- report ----------------------------------------------------------------

struct RunSummary {
  std::string run;
  std::uint64_t seed = 0;
  LossMode mode = LossMode::uncertainty;
  std::string data_fingerprint;
  MetricsReport dev;
  SigmaSource sigma;
};

RunSummary load_run_summary(const std::filesystem::path& dir) {
  const auto path = dir / "summary.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("no run summary at " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  RunSummary rs;
  rs.run = j.at("run").get<std::string>();
  rs.seed = j.at("seed").get<std::uint64_t>();
  rs.mode = j.at("loss_mode").get<std::string>() == "fixed"
                ? LossMode::fixed
                : LossMode::uncertainty;
  rs.data_fingerprint = j.at("data_fingerprint").get<std::string>();
  const auto& dev = j.at("dev");
  rs.dev.n = dev.at("n").get<std::size_t>();
  rs.dev.joint_rmse = dev.at("joint_rmse").get<double>();
  rs.dev.rmse_v = dev.at("rmse_v").get<double>();
  rs.dev.rmse_a = dev.at("rmse_a").get<double>();
  if (!dev.at("pcc_v").is_null()) rs.dev.pcc_v = dev.at("pcc_v").get<double>();
  if (!dev.at("pcc_a").is_null()) rs.dev.pcc_a = dev.at("pcc_a").get<double>();
  if (rs.dev.pcc_v && rs.dev.pcc_a) rs.dev.gap = *rs.dev.pcc_v - *rs.dev.pcc_a;
  rs.sigma = {rs.run, rs.seed, j.at("sigma").at("logvar_v").get<double>(),
              j.at("sigma").at("logvar_a").get<double>(), rs.mode};
  return rs;
}

int cmd_report(const std::vector<std::string>& dirs, bool ablate,
               const std::vector<std::string>& compare, std::ostream& out) {
  std::vector<RunSummary> runs;
  for (const auto& dir : dirs) runs.push_back(load_run_summary(dir));

  // sigma table over uncertainty-mode runs
  std::vector<SigmaSource> sources;
  for (const auto& run : runs) {
    if (run.mode == LossMode::uncertainty) sources.push_back(run.sigma);
  }
  if (!sources.empty()) {
    const auto rep = sigma_report(sources);
    out << "learned sigma^2 (uncertainty-mode runs)\n";
    out << std::left << std::setw(34) << "run" << std::right << std::setw(8)
        << "seed" << std::setw(10) << "var_v" << std::setw(10) << "var_a"
        << std::setw(10) << "ratio" << "\n";
    for (const auto& row : rep.rows) {
      out << std::left << std::setw(34) << row.name << std::right
          << std::setw(8) << row.seed << std::fixed << std::setprecision(3)
          << std::setw(10) << row.var_v << std::setw(10) << row.var_a
          << std::setprecision(2) << std::setw(10) << row.ratio_v_over_a
          << "\n";
      out.unsetf(std::ios::floatfield);
    }
    out << std::fixed << std::setprecision(3);
    out << "cross-seed var_v range [" << rep.min_var_v << ", " << rep.max_var_v
        << "] width " << rep.range_var_v << "\n";
    out << "cross-seed var_a range [" << rep.min_var_a << ", " << rep.max_var_a
        << "] width " << rep.range_var_a << "\n";
    out.unsetf(std::ios::floatfield);
  }

  // V/A difficulty gap table from each run's best dev metrics
  {
    std::vector<std::pair<std::string, MetricsReport>> named;
    for (const auto& run : runs) {
      if (run.dev.pcc_v && run.dev.pcc_a) named.push_back({run.run, run.dev});
    }
    if (!named.empty()) {
      const auto rows = va_gap_report(named);
      out << "\nV/A difficulty gap (dev PCC)\n";
      out << std::left << std::setw(34) << "run" << std::right << std::setw(10)
          << "pcc_v" << std::setw(10) << "pcc_a" << std::setw(10) << "gap"
          << "\n";
      for (const auto& row : rows) {
        out << std::left << std::setw(34) << row.name << std::right
            << std::fixed << std::setprecision(3) << std::setw(10) << row.pcc_v
            << std::setw(10) << row.pcc_a << std::showpos << std::setw(10)
            << row.gap << std::noshowpos << "\n";
        out.unsetf(std::ios::floatfield);
      }
    }
  }

  if (!compare.empty()) {
    if (compare.size() != 2) {
      throw ValidationError("--compare needs exactly two run directories");
    }
    const auto a = load_run_summary(compare[0]);
    const auto b = load_run_summary(compare[1]);
    const double dist = compare_sigma_profiles(a.sigma, b.sigma);
    out << "\nsigma profile distance (" << a.run << " vs " << b.run
        << "): max |d var^2| = " << std::fixed << std::setprecision(4) << dist
        << "\n";
    out.unsetf(std::ios::floatfield);
  }

  if (ablate) {
    // pair uncertainty and fixed runs by seed, on identical data
    std::map<std::uint64_t, const RunSummary*> with_u, without_u;
    for (const auto& run : runs) {
      (run.mode == LossMode::uncertainty ? with_u : without_u)[run.seed] = &run;
    }
    if (with_u.empty() || without_u.empty()) {
      throw ValidationError(
          "--ablate needs at least one uncertainty-mode and one fixed-mode run");
    }
    std::vector<double> deltas;
    out << "\nuncertainty ablation (dev joint RMSE, negative = uncertainty wins)\n";
    out << std::right << std::setw(8) << "seed" << std::setw(12) << "fixed"
        << std::setw(14) << "uncertainty" << std::setw(10) << "delta" << "\n";
    for (const auto& [seed, uw] : with_u) {
      const auto it = without_u.find(seed);
      if (it == without_u.end()) continue;
      const auto* fw = it->second;
      if (fw->data_fingerprint != uw->data_fingerprint) {
        throw ValidationError("--ablate: runs for seed " + std::to_string(seed) +
                              " were trained on different data");
      }
      const double delta = ablation_compare(uw->dev, fw->dev);
      deltas.push_back(delta);
      out << std::setw(8) << seed << std::fixed << std::setprecision(4)
          << std::setw(12) << fw->dev.joint_rmse << std::setw(14)
          << uw->dev.joint_rmse << std::setprecision(1) << std::showpos
          << std::setw(9) << delta * 100.0 << "%" << std::noshowpos << "\n";
      out.unsetf(std::ios::floatfield);
    }
    if (deltas.empty()) {
      throw ValidationError("--ablate: no seed appears in both modes");
    }
    std::sort(deltas.begin(), deltas.end());
    const double median = deltas.size() % 2 == 1
                              ? deltas[deltas.size() / 2]
                              : 0.5 * (deltas[deltas.size() / 2 - 1] +
                                       deltas[deltas.size() / 2]);
    out << "median delta: " << std::fixed << std::setprecision(1)
        << std::showpos << median * 100.0 << "%" << std::noshowpos << "\n";
    out.unsetf(std::ios::floatfield);
  }
  return kExitOk;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"uncertainty-weighted valence/arousal regression"};
  app.name("vareg");
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand(
      "gen", "generate a synthetic corpus with controllable V/A noise");
  gen_cmd->add_option("--out", gen.out_path, "output dataset (jsonl)")
      ->required();
  gen_cmd->add_option("--n", gen.n, "number of instances")->required();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->required();
  gen_cmd->add_option("--vocab", gen.vocab, "vocabulary size");
  gen_cmd->add_option("--min-tokens", gen.min_tokens, "min tokens per text");
  gen_cmd->add_option("--max-tokens", gen.max_tokens, "max tokens per text");
  gen_cmd->add_option("--valence-noise", gen.valence_noise,
                      "valence label noise SD");
  gen_cmd->add_option("--arousal-noise", gen.arousal_noise,
                      "arousal label noise SD");
  gen_cmd->add_option("--dev-fraction", gen.dev_fraction,
                      "also split off this dev fraction");
  gen_cmd->add_option("--split-seed", gen.split_seed, "seed for the split");
  gen_cmd->add_option("--train-out", gen.train_out, "train split output");
  gen_cmd->add_option("--dev-out", gen.dev_out, "dev split output");

  std::string train_config, train_out_dir;
  std::vector<std::string> train_sets;
  auto* train_cmd =
      app.add_subcommand("train", "train one model per seed from a config");
  train_cmd->add_option("--config", train_config, "experiment config file")
      ->required();
  train_cmd->add_option("--set", train_sets,
                        "override a config key (key=value), repeatable");
  train_cmd->add_option("--out-dir", train_out_dir, "override out.dir");

  std::string pr_ckpt, pr_data, pr_out;
  auto* predict_cmd =
      app.add_subcommand("predict", "write predictions for a dataset");
  predict_cmd->add_option("--checkpoint", pr_ckpt, "checkpoint file")
      ->required();
  predict_cmd->add_option("--data", pr_data, "dataset (jsonl)")->required();
  predict_cmd->add_option("--out", pr_out, "output prediction file")
      ->required();

  std::vector<std::string> ens_inputs;
  std::string ens_out;
  auto* ensemble_cmd =
      app.add_subcommand("ensemble", "average aligned prediction files");
  ensemble_cmd->add_option("--out", ens_out, "output prediction file")
      ->required();
  ensemble_cmd->add_option("inputs", ens_inputs, "input prediction files")
      ->required()
      ->expected(-1);

  std::string ev_gold, ev_pred, ev_name = "eval", ev_record;
  auto* eval_cmd =
      app.add_subcommand("eval", "score a prediction file against gold labels");
  eval_cmd->add_option("--gold", ev_gold, "labeled dataset (jsonl)")
      ->required();
  eval_cmd->add_option("--pred", ev_pred, "prediction file")->required();
  eval_cmd->add_option("--name", ev_name, "report name");
  eval_cmd->add_option("--record", ev_record, "also write a JSON record here");

  std::vector<std::string> rep_dirs, rep_compare;
  bool rep_ablate = false;
  auto* report_cmd = app.add_subcommand(
      "report", "sigma tables, V/A gap table and ablation deltas");
  report_cmd->add_option("dirs", rep_dirs, "run directories")
      ->required()
      ->expected(-1);
  report_cmd->add_flag("--ablate", rep_ablate,
                       "compare uncertainty vs fixed runs paired by seed");
  report_cmd->add_option("--compare", rep_compare,
                         "two run dirs for a sigma profile distance")
      ->expected(2);

  std::vector<const char*> argv;
  argv.push_back("vareg");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, out);
    if (train_cmd->parsed()) {
      return cmd_train(train_config, train_sets, train_out_dir, out);
    }
    if (predict_cmd->parsed()) return cmd_predict(pr_ckpt, pr_data, pr_out, out);
    if (ensemble_cmd->parsed()) return cmd_ensemble(ens_inputs, ens_out, out);
    if (eval_cmd->parsed()) {
      return cmd_eval(ev_gold, ev_pred, ev_name, ev_record, out);
    }
    if (report_cmd->parsed()) {
      return cmd_report(rep_dirs, rep_ablate, rep_compare, out);
    }
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  err << "no subcommand given\n";
  return kExitValidation;
}

}  // namespace vareg
