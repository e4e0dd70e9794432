#include "vareg/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "vareg/error.hpp"

namespace vareg {

void validate(const OptimizerConfig& cfg) {
  if (cfg.model_lr <= 0.0 || cfg.sigma_lr <= 0.0) {
    throw ValidationError("optimizer: learning rates must be > 0");
  }
  if (!(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0)) {
    throw ValidationError("optimizer: warmup_fraction must lie in [0, 1)");
  }
  if (cfg.clip_norm <= 0.0) {
    throw ValidationError("optimizer: clip_norm must be > 0");
  }
  if (cfg.weight_decay < 0.0) {
    throw ValidationError("optimizer: weight_decay must be >= 0");
  }
}

OptimizerState init_optimizer(const ModelParams& p) {
  OptimizerState st;
  st.m = zero_like(p);
  st.v = zero_like(p);
  return st;
}

double lr_at(long step, long total_steps, double peak_lr,
             double warmup_fraction) {
  if (total_steps < 1 || step < 0 || step > total_steps) {
    throw ValidationError("lr_at: need 0 <= step <= total_steps, total >= 1");
  }
  const long warmup_steps = static_cast<long>(
      std::ceil(warmup_fraction * static_cast<double>(total_steps)));
  if (step >= warmup_steps) return peak_lr;
  return peak_lr * static_cast<double>(step) /
         static_cast<double>(warmup_steps);
}

double clip_gradients(Gradients& grads, double clip_norm) {
  if (clip_norm <= 0.0) throw ValidationError("clip_gradients: clip_norm <= 0");
  auto slots = param_slots(grads);
  double sq = 0.0;
  for (const auto& slot : slots) {
    for (std::ptrdiff_t i = 0; i < slot.size; ++i) {
      const double g = slot.data[i];
      if (!std::isfinite(g)) {
        std::ostringstream os;
        os << "clip_gradients: non-finite gradient in " << slot.name;
        throw NumericError(os.str());
      }
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (const auto& slot : slots) {
      for (std::ptrdiff_t i = 0; i < slot.size; ++i) slot.data[i] *= scale;
    }
  }
  return norm;
}

void adam_step(OptimizerState& state, ModelParams& params,
               const Gradients& grads, const OptimizerConfig& cfg,
               long schedule_step, long total_steps) {
  validate(cfg);
  auto ps = param_slots(params);
  const auto gs = param_slots(grads);
  auto ms = param_slots(state.m);
  auto vs = param_slots(state.v);
  for (std::size_t s = 0; s < ps.size(); ++s) {
    if (gs[s].size != ps[s].size || ms[s].size != ps[s].size) {
      std::ostringstream os;
      os << "adam_step: shape mismatch in " << ps[s].name << " (params "
         << ps[s].size << ", grads " << gs[s].size << ")";
      throw ValidationError(os.str());
    }
  }

  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double model_lr =
      lr_at(schedule_step, total_steps, cfg.model_lr, cfg.warmup_fraction);
  const double sigma_lr =
      lr_at(schedule_step, total_steps, cfg.sigma_lr,
            cfg.sigma_warmup ? cfg.warmup_fraction : 0.0);
  state.last_model_lr = model_lr;
  state.last_sigma_lr = sigma_lr;

  for (std::size_t s = 0; s < ps.size(); ++s) {
    const double lr = ps[s].sigma ? sigma_lr : model_lr;
    double* p = ps[s].data;
    const double* g = gs[s].data;
    double* m = ms[s].data;
    double* v = vs[s].data;
    const bool decay = ps[s].decay && cfg.weight_decay > 0.0;
    for (std::ptrdiff_t i = 0; i < ps[s].size; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      if (decay) p[i] -= lr * cfg.weight_decay * p[i];
    }
  }
}

}  // namespace vareg
