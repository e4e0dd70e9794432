#include "vareg/model.hpp"

#include <cmath>
#include <sstream>

#include "vareg/error.hpp"

namespace vareg {

void validate(const ModelConfig& cfg) {
  if (cfg.embed_dim < 1 || cfg.hidden_dim < 1) {
    throw ValidationError("model: dims must be >= 1");
  }
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
    throw ValidationError("model: dropout_rate must lie in [0, 1)");
  }
}

Gradients zero_like(const ModelParams& p) {
  Gradients g;
  g.embeddings = Eigen::MatrixXd::Zero(p.embeddings.rows(), p.embeddings.cols());
  g.hidden_w = Eigen::MatrixXd::Zero(p.hidden_w.rows(), p.hidden_w.cols());
  g.hidden_b = Eigen::VectorXd::Zero(p.hidden_b.size());
  g.head_v_w = Eigen::VectorXd::Zero(p.head_v_w.size());
  g.head_a_w = Eigen::VectorXd::Zero(p.head_a_w.size());
  return g;
}

template <typename Params, typename Slot>
static std::vector<Slot> make_slots(Params& p) {
  return {
      {p.embeddings.data(), p.embeddings.size(), false, true, "embeddings"},
      {p.hidden_w.data(), p.hidden_w.size(), false, true, "hidden_w"},
      {p.hidden_b.data(), p.hidden_b.size(), false, false, "hidden_b"},
      {p.head_v_w.data(), p.head_v_w.size(), false, true, "head_v_w"},
      {&p.head_v_b, 1, false, false, "head_v_b"},
      {p.head_a_w.data(), p.head_a_w.size(), false, true, "head_a_w"},
      {&p.head_a_b, 1, false, false, "head_a_b"},
      {&p.logvar_v, 1, true, false, "logvar_v"},
      {&p.logvar_a, 1, true, false, "logvar_a"},
  };
}

std::vector<ParamSlot> param_slots(ModelParams& p) {
  return make_slots<ModelParams, ParamSlot>(p);
}

std::vector<ConstParamSlot> param_slots(const ModelParams& p) {
  return make_slots<const ModelParams, ConstParamSlot>(p);
}

ModelParams init_params(const ModelConfig& model_cfg,
                        const FeaturizerConfig& feat_cfg, std::uint64_t seed) {
  validate(model_cfg);
  validate(feat_cfg);
  Rng rng(seed);
  ModelParams p;
  p.embeddings.resize(feat_cfg.bucket_count, model_cfg.embed_dim);
  p.hidden_w.resize(2 * model_cfg.embed_dim, model_cfg.hidden_dim);
  p.hidden_b = Eigen::VectorXd::Zero(model_cfg.hidden_dim);
  p.head_v_w.resize(model_cfg.hidden_dim);
  p.head_a_w.resize(model_cfg.hidden_dim);

  // fill order: storage order of each weight array, then u_V, u_A
  for (Eigen::MatrixXd* m : {&p.embeddings, &p.hidden_w}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) {
      m->data()[i] = rng.uniform(-0.05, 0.05);
    }
  }
  for (Eigen::VectorXd* v : {&p.head_v_w, &p.head_a_w}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      v->data()[i] = rng.uniform(-0.05, 0.05);
    }
  }
  p.logvar_v = std::log(rng.uniform(0.2, 1.0));
  p.logvar_a = std::log(rng.uniform(0.2, 1.0));
  return p;
}

namespace {

Eigen::VectorXd pool_rows(const Eigen::MatrixXd& table,
                          const std::vector<std::uint32_t>& indices) {
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(table.cols());
  if (indices.empty()) return pooled;
  for (const auto idx : indices) {
    if (static_cast<Eigen::Index>(idx) >= table.rows()) {
      std::ostringstream os;
      os << "forward: feature index " << idx << " out of range (bucket_count "
         << table.rows() << ")";
      throw ValidationError(os.str());
    }
    pooled += table.row(static_cast<Eigen::Index>(idx)).transpose();
  }
  pooled /= static_cast<double>(indices.size());
  return pooled;
}

}  // namespace

Activations forward(const ModelParams& p, const FeatureIndices& feats,
                    bool train_mode, Rng* dropout_rng, double dropout_rate) {
  Activations act;
  act.pooled_text = pool_rows(p.embeddings, feats.text);
  act.pooled_aspect = pool_rows(p.embeddings, feats.aspect);
  const auto de = p.embeddings.cols();
  Eigen::VectorXd z(2 * de);
  z << act.pooled_text, act.pooled_aspect;
  act.hidden = (p.hidden_w.transpose() * z + p.hidden_b).array().tanh().matrix();

  const bool apply_dropout = train_mode && dropout_rate > 0.0;
  if (apply_dropout) {
    if (dropout_rng == nullptr) {
      throw ValidationError("forward: train mode with dropout needs an rng");
    }
    const double keep = 1.0 - dropout_rate;
    act.dropout_scale.resize(act.hidden.size());
    for (Eigen::Index i = 0; i < act.hidden.size(); ++i) {
      act.dropout_scale[i] =
          dropout_rng->uniform01() < dropout_rate ? 0.0 : 1.0 / keep;
    }
    const Eigen::VectorXd dropped = act.hidden.cwiseProduct(act.dropout_scale);
    act.y_v = p.head_v_w.dot(dropped) + p.head_v_b;
    act.y_a = p.head_a_w.dot(dropped) + p.head_a_b;
  } else {
    act.y_v = p.head_v_w.dot(act.hidden) + p.head_v_b;
    act.y_a = p.head_a_w.dot(act.hidden) + p.head_a_b;
  }
  return act;
}

double mse(std::span<const double> preds, std::span<const double> golds) {
  if (preds.empty() || preds.size() != golds.size()) {
    throw ValidationError("mse: sequences must be nonempty and equal length");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - golds[i];
    acc += d * d;
  }
  return acc / static_cast<double>(preds.size());
}

UncertaintyLoss uncertainty_loss(const TaskLosses& t, double logvar_v,
                                 double logvar_a) {
  const double wv = 0.5 * std::exp(-logvar_v);
  const double wa = 0.5 * std::exp(-logvar_a);
  UncertaintyLoss out;
  out.total = wv * t.valence + wa * t.arousal + 0.5 * (logvar_v + logvar_a);
  out.grad_logvar_v = -wv * t.valence + 0.5;
  out.grad_logvar_a = -wa * t.arousal + 0.5;
  if (!std::isfinite(out.total) || !std::isfinite(out.grad_logvar_v) ||
      !std::isfinite(out.grad_logvar_a)) {
    throw NumericError("uncertainty_loss: non-finite intermediate");
  }
  return out;
}

double fixed_loss(const TaskLosses& t) { return t.valence + t.arousal; }

BatchGradients backward(const ModelParams& p,
                        std::span<const EncodedInstance> batch, LossMode mode,
                        double dropout_rate, Rng* dropout_rng) {
  if (batch.empty()) throw ValidationError("backward: empty batch");
  const bool train = dropout_rng != nullptr && dropout_rate > 0.0;
  const auto n = static_cast<double>(batch.size());
  const auto de = p.embeddings.cols();

  std::vector<Activations> acts;
  acts.reserve(batch.size());
  double sse_v = 0.0, sse_a = 0.0;
  for (const auto& inst : batch) {
    acts.push_back(forward(p, inst.feats, train, dropout_rng, dropout_rate));
    const double dv = acts.back().y_v - inst.valence;
    const double da = acts.back().y_a - inst.arousal;
    sse_v += dv * dv;
    sse_a += da * da;
  }

  BatchGradients out;
  out.count = batch.size();
  out.losses = {sse_v / n, sse_a / n};
  out.grads = zero_like(p);

  double coef_v = 1.0, coef_a = 1.0;
  if (mode == LossMode::uncertainty) {
    const auto ul = uncertainty_loss(out.losses, p.logvar_v, p.logvar_a);
    out.total = ul.total;
    out.grads.logvar_v = ul.grad_logvar_v;
    out.grads.logvar_a = ul.grad_logvar_a;
    coef_v = 0.5 * std::exp(-p.logvar_v);
    coef_a = 0.5 * std::exp(-p.logvar_a);
  } else {
    out.total = fixed_loss(out.losses);
  }

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& inst = batch[i];
    const auto& act = acts[i];
    const double g_yv = coef_v * 2.0 * (act.y_v - inst.valence) / n;
    const double g_ya = coef_a * 2.0 * (act.y_a - inst.arousal) / n;

    const Eigen::VectorXd post =
        train ? act.hidden.cwiseProduct(act.dropout_scale).eval() : act.hidden;
    out.grads.head_v_w += g_yv * post;
    out.grads.head_v_b += g_yv;
    out.grads.head_a_w += g_ya * post;
    out.grads.head_a_b += g_ya;

    Eigen::VectorXd g_hidden = g_yv * p.head_v_w + g_ya * p.head_a_w;
    if (train) g_hidden = g_hidden.cwiseProduct(act.dropout_scale);
    const Eigen::VectorXd g_pre =
        (g_hidden.array() * (1.0 - act.hidden.array().square())).matrix();

    Eigen::VectorXd z(2 * de);
    z << act.pooled_text, act.pooled_aspect;
    out.grads.hidden_w.noalias() += z * g_pre.transpose();
    out.grads.hidden_b += g_pre;

    const Eigen::VectorXd g_z = p.hidden_w * g_pre;
    if (!inst.feats.text.empty()) {
      const Eigen::RowVectorXd g_pooled =
          g_z.head(de).transpose() / static_cast<double>(inst.feats.text.size());
      for (const auto idx : inst.feats.text) {
        out.grads.embeddings.row(static_cast<Eigen::Index>(idx)) += g_pooled;
      }
    }
    if (!inst.feats.aspect.empty()) {
      const Eigen::RowVectorXd g_pooled =
          g_z.tail(de).transpose() /
          static_cast<double>(inst.feats.aspect.size());
      for (const auto idx : inst.feats.aspect) {
        out.grads.embeddings.row(static_cast<Eigen::Index>(idx)) += g_pooled;
      }
    }
  }
  return out;
}

namespace {

double eval_total(const ModelParams& p, std::span<const EncodedInstance> batch,
                  LossMode mode) {
  double sse_v = 0.0, sse_a = 0.0;
  for (const auto& inst : batch) {
    const auto act = forward(p, inst.feats, false, nullptr, 0.0);
    const double dv = act.y_v - inst.valence;
    const double da = act.y_a - inst.arousal;
    sse_v += dv * dv;
    sse_a += da * da;
  }
  const auto n = static_cast<double>(batch.size());
  const TaskLosses t{sse_v / n, sse_a / n};
  return mode == LossMode::uncertainty
             ? uncertainty_loss(t, p.logvar_v, p.logvar_a).total
             : fixed_loss(t);
}

}  // namespace

double finite_diff_check(const ModelParams& p0,
                         std::span<const EncodedInstance> batch, LossMode mode,
                         double epsilon, int probes, std::uint64_t probe_seed) {
  if (epsilon <= 0.0) throw ValidationError("finite_diff_check: epsilon <= 0");
  ModelParams p = p0;
  const BatchGradients analytic = backward(p, batch, mode, 0.0, nullptr);
  auto pslots = param_slots(p);
  const auto gslots = param_slots(analytic.grads);

  // candidate coordinates: every non-embedding parameter, plus embedding
  // rows touched by the batch (untouched rows have exactly zero gradient
  // on both routes and probe nothing)
  struct Coord {
    std::size_t slot;
    std::ptrdiff_t offset;
  };
  std::vector<Coord> pool;
  std::vector<Coord> always;
  for (std::size_t s = 0; s < pslots.size(); ++s) {
    const std::string_view name = pslots[s].name;
    if (name == "logvar_v" || name == "logvar_a" || name == "head_v_b" ||
        name == "head_a_b") {
      always.push_back({s, 0});
    } else if (name != "embeddings") {
      for (std::ptrdiff_t i = 0; i < pslots[s].size; ++i) pool.push_back({s, i});
    }
  }
  const auto rows = p.embeddings.rows();
  const auto cols = p.embeddings.cols();
  std::vector<bool> active(static_cast<std::size_t>(rows), false);
  for (const auto& inst : batch) {
    for (const auto idx : inst.feats.text) active[idx] = true;
    for (const auto idx : inst.feats.aspect) active[idx] = true;
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!active[static_cast<std::size_t>(r)]) continue;
    for (Eigen::Index c = 0; c < cols; ++c) {
      pool.push_back({0, c * rows + r});  // column-major offset in slot 0
    }
  }

  std::vector<Coord> chosen = always;
  Rng rng(probe_seed);
  const int want = std::max(probes - static_cast<int>(always.size()), 0);
  for (int i = 0; i < want; ++i) {
    chosen.push_back(pool[static_cast<std::size_t>(rng.bounded(pool.size()))]);
  }

  // The difference quotient carries ~|loss| * eps_fp64 / epsilon of
  // cancellation noise, so gradients below this floor cannot be resolved;
  // when both routes sit under it they agree to measurement resolution.
  // A wrong analytic zero against a large numeric value still fails.
  const double measure_floor =
      1e-6 * std::max(1.0, std::abs(analytic.total));

  double max_rel = 0.0;
  for (const auto& coord : chosen) {
    double* x = pslots[coord.slot].data + coord.offset;
    const double orig = *x;
    *x = orig + epsilon;
    const double up = eval_total(p, batch, mode);
    *x = orig - epsilon;
    const double down = eval_total(p, batch, mode);
    *x = orig;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double exact = gslots[coord.slot].data[coord.offset];
    if (std::max(std::abs(numeric), std::abs(exact)) < measure_floor) continue;
    const double rel =
        std::abs(numeric - exact) / std::max(std::abs(exact), 1e-8);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace vareg
