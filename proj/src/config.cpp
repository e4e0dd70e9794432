#include "vareg/config.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "vareg/error.hpp"
#include "vareg/rng.hpp"

namespace vareg {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

KeyValues KeyValues::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path.string());
}

KeyValues KeyValues::parse_text(std::string_view text,
                                const std::string& where) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(where + ": line " + std::to_string(lineno) +
                            ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError(where + ": line " + std::to_string(lineno) +
                            ": empty key");
    }
    kv.values_[key] = value;
  }
  return kv;
}

void KeyValues::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void KeyValues::set_pair(const std::string& pair) {
  const auto eq = pair.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override must look like key=value: " + pair);
  }
  set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
}

bool KeyValues::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string KeyValues::str(const std::string& key,
                           const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValues::num(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not a number: " +
                          it->second);
  }
  if (used != it->second.size()) {
    throw ValidationError("config key '" + key + "': not a number: " +
                          it->second);
  }
  return v;
}

long long KeyValues::integer(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(it->second, &used);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not an integer: " +
                          it->second);
  }
  if (used != it->second.size()) {
    throw ValidationError("config key '" + key + "': not an integer: " +
                          it->second);
  }
  return v;
}

std::uint64_t KeyValues::u64(const std::string& key,
                             std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(it->second, &used);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not an unsigned integer: " +
                          it->second);
  }
  if (used != it->second.size()) {
    throw ValidationError("config key '" + key + "': not an unsigned integer: " +
                          it->second);
  }
  return v;
}

bool KeyValues::flag(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ValidationError("config key '" + key + "': not a boolean: " + v);
}

std::vector<std::uint64_t> KeyValues::u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  const auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::istringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    try {
      out.push_back(std::stoull(t));
    } catch (const std::exception&) {
      throw ValidationError("config key '" + key + "': bad list entry: " + t);
    }
  }
  return out;
}

std::string KeyValues::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "data.train", "data.dev", "data.test", "out.dir", "seeds", "loss_mode",
      "train.batch_size", "train.accumulation_steps", "train.max_epochs",
      "train.patience",
      "model.embed_dim", "model.hidden_dim", "model.dropout",
      "featurizer.bucket_count", "featurizer.word_ngram_max",
      "featurizer.char_ngram_min", "featurizer.char_ngram_max",
      "featurizer.lowercase", "featurizer.hash_seed",
      "opt.model_lr", "opt.sigma_lr", "opt.weight_decay", "opt.beta1",
      "opt.beta2", "opt.eps", "opt.warmup_fraction", "opt.clip_norm",
      "opt.sigma_warmup",
  };
  return keys;
}

}  // namespace

ExperimentConfig experiment_from_keyvalues(const KeyValues& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (!known_keys().count(key)) {
      throw ValidationError("unknown config key: " + key);
    }
  }
  ExperimentConfig ec;
  if (!kv.has("data.train") || !kv.has("data.dev")) {
    throw ValidationError("config must set data.train and data.dev");
  }
  ec.train_path = kv.str("data.train", "");
  ec.dev_path = kv.str("data.dev", "");
  if (kv.has("data.test")) ec.test_path = kv.str("data.test", "");
  ec.out_dir = kv.str("out.dir", "runs");
  ec.seeds = kv.u64_list("seeds");
  if (ec.seeds.empty()) throw ValidationError("config must set a seed list");
  {
    std::set<std::uint64_t> uniq(ec.seeds.begin(), ec.seeds.end());
    if (uniq.size() != ec.seeds.size()) {
      throw ValidationError("config seeds must be distinct");
    }
  }

  TrainConfig& t = ec.train;
  const std::string mode = kv.str("loss_mode", "uncertainty");
  if (mode == "uncertainty") {
    t.loss_mode = LossMode::uncertainty;
  } else if (mode == "fixed") {
    t.loss_mode = LossMode::fixed;
  } else {
    throw ValidationError("loss_mode must be 'uncertainty' or 'fixed', got " +
                          mode);
  }
  t.batch_size = static_cast<int>(kv.integer("train.batch_size", 16));
  t.accumulation_steps =
      static_cast<int>(kv.integer("train.accumulation_steps", 4));
  t.max_epochs = static_cast<int>(kv.integer("train.max_epochs", 25));
  t.patience = static_cast<int>(kv.integer("train.patience", 3));
  t.model.embed_dim = static_cast<int>(kv.integer("model.embed_dim", 32));
  t.model.hidden_dim = static_cast<int>(kv.integer("model.hidden_dim", 64));
  t.model.dropout_rate = kv.num("model.dropout", 0.1);
  t.model.uncertainty_enabled = t.loss_mode == LossMode::uncertainty;
  t.featurizer.bucket_count =
      static_cast<int>(kv.integer("featurizer.bucket_count", 4096));
  t.featurizer.word_ngram_max =
      static_cast<int>(kv.integer("featurizer.word_ngram_max", 2));
  t.featurizer.char_ngram_min =
      static_cast<int>(kv.integer("featurizer.char_ngram_min", 3));
  t.featurizer.char_ngram_max =
      static_cast<int>(kv.integer("featurizer.char_ngram_max", 5));
  t.featurizer.lowercase = kv.flag("featurizer.lowercase", true);
  t.featurizer.hash_seed = kv.u64("featurizer.hash_seed", 0);
  t.optimizer.model_lr = kv.num("opt.model_lr", 2e-5);
  t.optimizer.sigma_lr = kv.num("opt.sigma_lr", 5e-2);
  t.optimizer.weight_decay = kv.num("opt.weight_decay", 0.01);
  t.optimizer.beta1 = kv.num("opt.beta1", 0.9);
  t.optimizer.beta2 = kv.num("opt.beta2", 0.999);
  t.optimizer.eps = kv.num("opt.eps", 1e-8);
  t.optimizer.warmup_fraction = kv.num("opt.warmup_fraction", 0.10);
  t.optimizer.clip_norm = kv.num("opt.clip_norm", 1.0);
  t.optimizer.sigma_warmup = kv.flag("opt.sigma_warmup", true);
  validate(t);
  return ec;
}

std::uint64_t config_hash(const KeyValues& kv) {
  // out.dir changes where artifacts land, never what they contain
  std::string canon;
  for (const auto& [k, v] : kv.entries()) {
    if (k == "out.dir") continue;
    canon += k;
    canon += " = ";
    canon += v;
    canon += '\n';
  }
  return fnv1a64(canon);
}

std::string config_hash_hex(const KeyValues& kv) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, config_hash(kv));
  return buf;
}

}  // namespace vareg
