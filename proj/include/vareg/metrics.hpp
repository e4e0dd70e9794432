#pragma once

// Evaluation metrics, seed-mean ensembling and sigma diagnostics.
//
// The joint RMSE pools both dimensions' squared errors under a single
// 1/N:  sqrt( (1/N) sum_i [ (v^_i - v_i)^2 + (a^_i - a_i)^2 ] ),
// so joint^2 = rmse_v^2 + rmse_a^2 holds as an identity.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vareg/model.hpp"
#include "vareg/types.hpp"

namespace vareg {

struct MetricsReport {
  double joint_rmse = 0.0;
  double rmse_v = 0.0;
  double rmse_a = 0.0;
  // Absent when undefined (fewer than 2 points, or zero variance on
  // either side). The strict pearson() below errors instead.
  std::optional<double> pcc_v;
  std::optional<double> pcc_a;
  std::optional<double> gap;  // pcc_v - pcc_a
  std::size_t n = 0;
};

double joint_rmse(std::span<const VA> preds, std::span<const VA> golds);
double dim_rmse(std::span<const double> preds, std::span<const double> golds);

// Pearson correlation; zero variance in either input is an error, not a
// silent 0 or NaN.
double pearson(std::span<const double> xs, std::span<const double> ys);

MetricsReport compute_metrics(std::span<const VA> preds,
                              std::span<const VA> golds);

// Elementwise arithmetic mean over K aligned prediction sets; ids must
// match position by position.
std::vector<Prediction> ensemble_mean(
    std::span<const std::vector<Prediction>> runs);

// What the sigma diagnostics need to know about a training run.
struct SigmaSource {
  std::string name;
  std::uint64_t seed = 0;
  double logvar_v = 0.0;
  double logvar_a = 0.0;
  LossMode mode = LossMode::uncertainty;
};

struct SigmaRow {
  std::string name;
  std::uint64_t seed = 0;
  double var_v = 0.0;
  double var_a = 0.0;
  double ratio_v_over_a = 0.0;
};

struct SigmaReport {
  std::vector<SigmaRow> rows;
  double min_var_v = 0.0, max_var_v = 0.0, range_var_v = 0.0;
  double min_var_a = 0.0, max_var_a = 0.0, range_var_a = 0.0;
};

// sigma^2 = e^s per run plus cross-run ranges; rejects fixed-mode runs,
// whose log-variances were never trained.
SigmaReport sigma_report(std::span<const SigmaSource> runs);

// Max over {V, A} of |sigma^2_runA - sigma^2_runB|.
double compare_sigma_profiles(const SigmaSource& a, const SigmaSource& b);

// (rmse_with - rmse_without) / rmse_without; negative means the
// uncertainty-weighted run won.
double ablation_compare(const MetricsReport& with_uncertainty,
                        const MetricsReport& without_uncertainty);

struct VaGapRow {
  std::string name;
  double pcc_v = 0.0;
  double pcc_a = 0.0;
  double gap = 0.0;
};

// Rows in input order plus a final "average" row.
std::vector<VaGapRow> va_gap_report(
    std::span<const std::pair<std::string, MetricsReport>> reports);

}  // namespace vareg
