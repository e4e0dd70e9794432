#pragma once

// Dual-head regression model with learned per-task log-variances.
//
// The encoder is a bag-of-hashed-ngrams embedding: text and aspect index
// multisets are mean-pooled over an embedding table, concatenated, and
// passed through one tanh hidden layer. Two linear heads read valence and
// arousal off the shared hidden state. Two scalar parameters s = log(sigma^2)
// weight the per-task MSE losses as
//
//   L = 1/2 e^{-s_V} L_V + 1/2 e^{-s_A} L_A + (s_V + s_A)/2
//
// so sigma^2 = e^s stays positive for every finite s, and the stationary
// point of s matches the task's MSE. All math is in fp64; gradients are
// analytic and checked against central finite differences.

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "vareg/featurizer.hpp"
#include "vareg/rng.hpp"

namespace vareg {

struct ModelConfig {
  int embed_dim = 32;
  int hidden_dim = 64;
  double dropout_rate = 0.1;
  bool uncertainty_enabled = true;
};

void validate(const ModelConfig& cfg);

struct ModelParams {
  Eigen::MatrixXd embeddings;  // bucket_count x embed_dim
  Eigen::MatrixXd hidden_w;    // (2*embed_dim) x hidden_dim
  Eigen::VectorXd hidden_b;    // hidden_dim
  Eigen::VectorXd head_v_w;    // hidden_dim
  Eigen::VectorXd head_a_w;    // hidden_dim
  double head_v_b = 0.0;
  double head_a_b = 0.0;
  double logvar_v = 0.0;  // s_V = log sigma^2_V
  double logvar_a = 0.0;
};

// Gradients share the parameter layout exactly.
using Gradients = ModelParams;

Gradients zero_like(const ModelParams& p);

// Flat view over every parameter array, in a fixed documented order:
// embeddings, hidden_w, hidden_b, head_v_w, head_v_b, head_a_w, head_a_b,
// logvar_v, logvar_a. Matrices expose Eigen's column-major storage.
struct ParamSlot {
  double* data;
  std::ptrdiff_t size;
  bool sigma;  // member of the sigma parameter group
  bool decay;  // receives decoupled weight decay (weights only)
  const char* name;
};
struct ConstParamSlot {
  const double* data;
  std::ptrdiff_t size;
  bool sigma;
  bool decay;
  const char* name;
};
std::vector<ParamSlot> param_slots(ModelParams& p);
std::vector<ConstParamSlot> param_slots(const ModelParams& p);

enum class LossMode { uncertainty, fixed };

struct TaskLosses {
  double valence = 0.0;
  double arousal = 0.0;
};

// Weights ~ Uniform(-0.05, 0.05), biases zero, and s = log(u) with
// u ~ Uniform(0.2, 1.0) drawn independently per task so the two heads
// start with asymmetric loss weights.
ModelParams init_params(const ModelConfig& model_cfg,
                        const FeaturizerConfig& feat_cfg, std::uint64_t seed);

struct Activations {
  Eigen::VectorXd pooled_text;    // embed_dim
  Eigen::VectorXd pooled_aspect;  // embed_dim
  Eigen::VectorXd hidden;         // tanh output, before dropout
  Eigen::VectorXd dropout_scale;  // per-unit 0 or 1/keep; empty in eval mode
  double y_v = 0.0;
  double y_a = 0.0;
};

// Inverted dropout on the hidden layer when train_mode is set (the rng is
// then required); eval mode is deterministic.
Activations forward(const ModelParams& p, const FeatureIndices& feats,
                    bool train_mode, Rng* dropout_rng, double dropout_rate);

double mse(std::span<const double> preds, std::span<const double> golds);

struct UncertaintyLoss {
  double total = 0.0;
  double grad_logvar_v = 0.0;  // -1/2 e^{-s} L + 1/2, task losses held fixed
  double grad_logvar_a = 0.0;
};
UncertaintyLoss uncertainty_loss(const TaskLosses& t, double logvar_v,
                                 double logvar_a);

double fixed_loss(const TaskLosses& t);

// One training example after featurization.
struct EncodedInstance {
  FeatureIndices feats;
  double valence = 0.0;
  double arousal = 0.0;
};

struct BatchGradients {
  Gradients grads;     // gradient of the batch-mean objective
  TaskLosses losses;   // batch-mean per-task MSE
  double total = 0.0;  // objective value under the selected mode
  std::size_t count = 0;
};

// Exact analytic gradients of the selected objective. Dropout masks are
// drawn per instance from dropout_rng (pass nullptr for eval-mode math,
// e.g. gradient checking).
BatchGradients backward(const ModelParams& p,
                        std::span<const EncodedInstance> batch, LossMode mode,
                        double dropout_rate, Rng* dropout_rng);

// Max relative error between analytic and central-difference gradients in
// eval mode, probed over `probes` coordinates (always including both
// log-variances and the head biases, plus random weights and embedding
// rows active in the batch). Denominator is max(|analytic|, 1e-8).
// Coordinates where both routes fall below the fp64 resolution of the
// difference quotient (~1e-6 times the loss magnitude) count as agreeing.
double finite_diff_check(const ModelParams& p,
                         std::span<const EncodedInstance> batch, LossMode mode,
                         double epsilon, int probes, std::uint64_t probe_seed);

}  // namespace vareg
