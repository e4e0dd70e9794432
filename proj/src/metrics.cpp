#include "vareg/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "vareg/error.hpp"

namespace vareg {

double joint_rmse(std::span<const VA> preds, std::span<const VA> golds) {
  if (preds.empty() || preds.size() != golds.size()) {
    throw ValidationError("joint_rmse: sequences must be nonempty and equal length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double dv = preds[i].v - golds[i].v;
    const double da = preds[i].a - golds[i].a;
    acc += dv * dv + da * da;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double dim_rmse(std::span<const double> preds, std::span<const double> golds) {
  if (preds.empty() || preds.size() != golds.size()) {
    throw ValidationError("dim_rmse: sequences must be nonempty and equal length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - golds[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(preds.size()));
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw ValidationError("pearson: need equal lengths >= 2");
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ValidationError("pearson: zero variance input (degenerate)");
  }
  return sxy / std::sqrt(sxx * syy);
}

MetricsReport compute_metrics(std::span<const VA> preds,
                              std::span<const VA> golds) {
  MetricsReport r;
  r.n = preds.size();
  double sse_v = 0.0, sse_a = 0.0;
  if (preds.empty() || preds.size() != golds.size()) {
    throw ValidationError("compute_metrics: sequences must be nonempty and equal length");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double dv = preds[i].v - golds[i].v;
    const double da = preds[i].a - golds[i].a;
    sse_v += dv * dv;
    sse_a += da * da;
  }
  const auto n = static_cast<double>(preds.size());
  r.rmse_v = std::sqrt(sse_v / n);
  r.rmse_a = std::sqrt(sse_a / n);
  r.joint_rmse = std::sqrt((sse_v + sse_a) / n);
  if (preds.size() >= 2) {
    std::vector<double> pv, gv, pa, ga;
    pv.reserve(preds.size());
    gv.reserve(preds.size());
    pa.reserve(preds.size());
    ga.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      pv.push_back(preds[i].v);
      gv.push_back(golds[i].v);
      pa.push_back(preds[i].a);
      ga.push_back(golds[i].a);
    }
    const auto var = [](const std::vector<double>& v) {
      double m = 0.0;
      for (const double x : v) m += x;
      m /= static_cast<double>(v.size());
      double s = 0.0;
      for (const double x : v) s += (x - m) * (x - m);
      return s;
    };
    if (var(pv) > 0.0 && var(gv) > 0.0) r.pcc_v = pearson(pv, gv);
    if (var(pa) > 0.0 && var(ga) > 0.0) r.pcc_a = pearson(pa, ga);
    if (r.pcc_v && r.pcc_a) r.gap = *r.pcc_v - *r.pcc_a;
  }
  return r;
}

std::vector<Prediction> ensemble_mean(
    std::span<const std::vector<Prediction>> runs) {
  if (runs.empty()) throw ValidationError("ensemble_mean: no prediction sets");
  const std::size_t n = runs.front().size();
  for (const auto& run : runs) {
    if (run.size() != n) {
      throw ValidationError("ensemble_mean: prediction sets differ in length");
    }
  }
  std::vector<Prediction> out;
  out.reserve(n);
  const auto k = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = runs.front()[i].id;
    double sv = 0.0, sa = 0.0;
    for (const auto& run : runs) {
      if (run[i].id != id) {
        throw ValidationError("ensemble_mean: misaligned ids at position " +
                              std::to_string(i) + " ('" + id + "' vs '" +
                              run[i].id + "')");
      }
      sv += run[i].va.v;
      sa += run[i].va.a;
    }
    out.push_back({id, {sv / k, sa / k}});
  }
  return out;
}

SigmaReport sigma_report(std::span<const SigmaSource> runs) {
  if (runs.empty()) throw ValidationError("sigma_report: no runs");
  SigmaReport rep;
  for (const auto& run : runs) {
    if (run.mode != LossMode::uncertainty) {
      throw ValidationError("sigma_report: run '" + run.name +
                            "' was trained with fixed loss weights");
    }
    SigmaRow row;
    row.name = run.name;
    row.seed = run.seed;
    row.var_v = std::exp(run.logvar_v);
    row.var_a = std::exp(run.logvar_a);
    row.ratio_v_over_a = row.var_v / row.var_a;
    rep.rows.push_back(std::move(row));
  }
  rep.min_var_v = rep.max_var_v = rep.rows.front().var_v;
  rep.min_var_a = rep.max_var_a = rep.rows.front().var_a;
  for (const auto& row : rep.rows) {
    rep.min_var_v = std::min(rep.min_var_v, row.var_v);
    rep.max_var_v = std::max(rep.max_var_v, row.var_v);
    rep.min_var_a = std::min(rep.min_var_a, row.var_a);
    rep.max_var_a = std::max(rep.max_var_a, row.var_a);
  }
  rep.range_var_v = rep.max_var_v - rep.min_var_v;
  rep.range_var_a = rep.max_var_a - rep.min_var_a;
  return rep;
}

double compare_sigma_profiles(const SigmaSource& a, const SigmaSource& b) {
  for (const auto* run : {&a, &b}) {
    if (run->mode != LossMode::uncertainty) {
      throw ValidationError("compare_sigma_profiles: run '" + run->name +
                            "' was trained with fixed loss weights");
    }
  }
  const double dv = std::abs(std::exp(a.logvar_v) - std::exp(b.logvar_v));
  const double da = std::abs(std::exp(a.logvar_a) - std::exp(b.logvar_a));
  return std::max(dv, da);
}

double ablation_compare(const MetricsReport& with_uncertainty,
                        const MetricsReport& without_uncertainty) {
  if (with_uncertainty.n != without_uncertainty.n) {
    throw ValidationError("ablation_compare: reports cover different n");
  }
  if (without_uncertainty.joint_rmse <= 0.0) {
    throw ValidationError("ablation_compare: baseline RMSE must be positive");
  }
  return (with_uncertainty.joint_rmse - without_uncertainty.joint_rmse) /
         without_uncertainty.joint_rmse;
}

std::vector<VaGapRow> va_gap_report(
    std::span<const std::pair<std::string, MetricsReport>> reports) {
  std::vector<VaGapRow> rows;
  if (reports.empty()) return rows;
  double sum_v = 0.0, sum_a = 0.0;
  for (const auto& [name, rep] : reports) {
    if (!rep.pcc_v || !rep.pcc_a) {
      throw ValidationError("va_gap_report: report '" + name +
                            "' has undefined PCC");
    }
    rows.push_back({name, *rep.pcc_v, *rep.pcc_a, *rep.pcc_v - *rep.pcc_a});
    sum_v += *rep.pcc_v;
    sum_a += *rep.pcc_a;
  }
  const auto n = static_cast<double>(reports.size());
  rows.push_back({"average", sum_v / n, sum_a / n, (sum_v - sum_a) / n});
  return rows;
}

}  // namespace vareg
