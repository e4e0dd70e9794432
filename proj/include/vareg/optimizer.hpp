#pragma once

// Adam with decoupled weight decay, two parameter groups, linear warmup
// and global-norm gradient clipping.
//
// The model group (embeddings, hidden layer, heads) and the sigma group
// (the two log-variances) share one moment state but use independent peak
// learning rates with the same warmup shape. Weight decay touches weight
// matrices only: never biases, and never the sigma group, whose stationary
// point must stay at e^s = task MSE.

#include <cstdint>

#include "vareg/model.hpp"

namespace vareg {

struct OptimizerConfig {
  double model_lr = 2e-5;  // scale-adjustable; desk-scale runs set ~5e-2
  double sigma_lr = 5e-2;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double warmup_fraction = 0.10;
  double clip_norm = 1.0;
  bool sigma_warmup = true;  // apply the warmup shape to the sigma group too
};

void validate(const OptimizerConfig& cfg);

struct OptimizerState {
  Gradients m;  // first moments, parameter layout
  Gradients v;  // second moments
  long step = 0;
  double last_model_lr = 0.0;
  double last_sigma_lr = 0.0;
};

OptimizerState init_optimizer(const ModelParams& p);

// Linear ramp 0 -> peak over ceil(warmup_fraction * total_steps) steps,
// then constant peak.
double lr_at(long step, long total_steps, double peak_lr,
             double warmup_fraction);

// Scales all gradients jointly so the global L2 norm is at most clip_norm.
// Returns the pre-clip global norm.
double clip_gradients(Gradients& grads, double clip_norm);

// One Adam step with bias correction; decoupled decay p <- p - lr*wd*p on
// decaying slots only. schedule_step indexes the warmup ramp (1-based).
void adam_step(OptimizerState& state, ModelParams& params,
               const Gradients& grads, const OptimizerConfig& cfg,
               long schedule_step, long total_steps);

}  // namespace vareg
