#include "vareg/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vareg/error.hpp"
#include "vareg/rng.hpp"

namespace vareg {

using nlohmann::json;

bool Dataset::fully_labeled() const {
  for (const auto& inst : instances) {
    if (!inst.valence.has_value() || !inst.arousal.has_value()) return false;
  }
  return true;
}

namespace {

double parse_label(const json& j, const char* field, const std::string& where) {
  if (!j.at(field).is_number()) {
    throw ValidationError(where + ": field '" + field + "' must be a number");
  }
  const double x = j.at(field).get<double>();
  if (!(x >= 1.0 && x <= 9.0)) {
    std::ostringstream os;
    os << where << ": " << field << " " << x << " outside [1, 9]";
    throw ValidationError(os.str());
  }
  return x;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, bool require_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open dataset file: " + path.string());
  }
  Dataset ds;
  ds.name = path.stem().string();
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.string() + ": line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": malformed record: " + e.what());
    }
    if (!j.is_object()) throw ValidationError(where + ": record is not an object");
    Instance inst;
    if (!j.contains("id") || !j.at("id").is_string()) {
      throw ValidationError(where + ": missing string field 'id'");
    }
    inst.id = j.at("id").get<std::string>();
    if (inst.id.empty()) throw ValidationError(where + ": empty id");
    if (!seen_ids.insert(inst.id).second) {
      throw ValidationError(where + ": duplicate id '" + inst.id + "'");
    }
    if (!j.contains("text") || !j.at("text").is_string()) {
      throw ValidationError(where + ": missing string field 'text'");
    }
    inst.text = j.at("text").get<std::string>();
    if (inst.text.empty()) throw ValidationError(where + ": empty text");
    if (j.contains("aspect")) {
      if (!j.at("aspect").is_string()) {
        throw ValidationError(where + ": field 'aspect' must be a string");
      }
      inst.aspect = j.at("aspect").get<std::string>();
    }
    if (j.contains("valence")) inst.valence = parse_label(j, "valence", where);
    if (j.contains("arousal")) inst.arousal = parse_label(j, "arousal", where);
    if (require_labels && (!inst.valence || !inst.arousal)) {
      throw ValidationError(where + ": labels required but missing");
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::string body;
  for (const auto& inst : ds.instances) {
    json j;
    j["id"] = inst.id;
    j["text"] = inst.text;
    j["aspect"] = inst.aspect;
    if (inst.valence) j["valence"] = *inst.valence;
    if (inst.arousal) j["arousal"] = *inst.arousal;
    body += j.dump();
    body += '\n';
  }
  atomic_write(path, body);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                          double dev_fraction,
                                          std::uint64_t seed) {
  if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
    throw ValidationError("split_dataset: dev_fraction must lie in (0, 1)");
  }
  if (ds.size() < 2) {
    throw ValidationError("split_dataset: need at least 2 instances");
  }
  const std::size_t n = ds.size();
  const auto dev_n = static_cast<std::size_t>(
      std::llround(dev_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);
  std::vector<bool> is_dev(n, false);
  for (std::size_t i = 0; i < dev_n; ++i) is_dev[order[i]] = true;
  Dataset train, dev;
  train.name = ds.name + "-train";
  dev.name = ds.name + "-dev";
  for (std::size_t i = 0; i < n; ++i) {
    (is_dev[i] ? dev : train).instances.push_back(ds.instances[i]);
  }
  return {std::move(train), std::move(dev)};
}

namespace {

// Round the shortest decimal representation of x (already in [1, 9]) to
// two fraction digits, half away from zero.
std::string format_score(double x) {
  x = std::clamp(x, 1.0, 9.0);
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, res.ptr);
  std::string ip = s, fp;
  if (const auto dot = s.find('.'); dot != std::string::npos) {
    ip = s.substr(0, dot);
    fp = s.substr(dot + 1);
  }
  if (fp.size() < 2) fp.append(2 - fp.size(), '0');
  if (fp.size() > 2 && fp[2] >= '5') {
    // carry through the kept fraction digits into the integer part
    int frac = (fp[0] - '0') * 10 + (fp[1] - '0') + 1;
    int whole = std::stoi(ip);
    if (frac == 100) {
      frac = 0;
      ++whole;
    }
    ip = std::to_string(whole);
    fp = std::string(1, static_cast<char>('0' + frac / 10)) +
         static_cast<char>('0' + frac % 10);
  } else {
    fp.resize(2);
  }
  return ip + "." + fp;
}

}  // namespace

std::string format_va(double v, double a) {
  if (!std::isfinite(v) || !std::isfinite(a)) {
    throw ValidationError("format_va: non-finite value");
  }
  return format_score(v) + "#" + format_score(a);
}

std::pair<double, double> parse_va(std::string_view s) {
  const auto bad = [&](const char* why) {
    throw ValidationError("parse_va: " + std::string(why) + " in '" +
                          std::string(s) + "'");
  };
  if (s.size() != 9) bad("expected d.dd#d.dd");
  if (s[4] != '#') bad("wrong separator");
  if (s[1] != '.' || s[6] != '.') bad("wrong decimal point");
  for (const std::size_t i : {0u, 2u, 3u, 5u, 7u, 8u}) {
    if (s[i] < '0' || s[i] > '9') bad("non-digit");
  }
  const auto score = [&](std::size_t off) {
    const int cents = (s[off] - '0') * 100 + (s[off + 2] - '0') * 10 +
                      (s[off + 3] - '0');
    if (cents < 100 || cents > 900) bad("value outside [1.00, 9.00]");
    return static_cast<double>(cents) / 100.0;
  };
  return {score(0), score(5)};
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const std::string> ids,
                       std::span<const VA> preds) {
  if (ids.size() != preds.size()) {
    throw ValidationError("write_predictions: ids/preds length mismatch");
  }
  std::string body;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    body += ids[i];
    body += '\t';
    body += format_va(preds[i].v, preds[i].a);
    body += '\n';
  }
  atomic_write(path, body);
}

void write_predictions(const std::filesystem::path& path,
                       std::span<const Prediction> preds) {
  std::vector<std::string> ids;
  std::vector<VA> vas;
  ids.reserve(preds.size());
  vas.reserve(preds.size());
  for (const auto& p : preds) {
    ids.push_back(p.id);
    vas.push_back(p.va);
  }
  write_predictions(path, ids, vas);
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open prediction file: " + path.string());
  }
  std::vector<Prediction> preds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ValidationError(path.string() + ": line " + std::to_string(lineno) +
                            ": expected id<TAB>V.VV#A.AA");
    }
    Prediction p;
    p.id = line.substr(0, tab);
    const auto [v, a] = parse_va(std::string_view(line).substr(tab + 1));
    p.va = {v, a};
    preds.push_back(std::move(p));
  }
  return preds;
}

Dataset generate_synthetic(const SynthSpec& spec) {
  if (spec.vocab_size < 1) {
    throw ValidationError("generate_synthetic: vocab_size must be positive");
  }
  if (spec.n_instances < 1) {
    throw ValidationError("generate_synthetic: n_instances must be positive");
  }
  if (spec.min_tokens_per_text < 1 ||
      spec.max_tokens_per_text < spec.min_tokens_per_text) {
    throw ValidationError("generate_synthetic: bad tokens_per_text range");
  }
  if (!std::isfinite(spec.valence_noise_sd) || spec.valence_noise_sd < 0.0 ||
      !std::isfinite(spec.arousal_noise_sd) || spec.arousal_noise_sd < 0.0) {
    throw ValidationError("generate_synthetic: noise SDs must be finite and >= 0");
  }

  Rng rng(spec.seed);
  const auto vocab = static_cast<std::size_t>(spec.vocab_size);
  std::vector<double> contrib_v(vocab), contrib_a(vocab);
  for (std::size_t i = 0; i < vocab; ++i) {
    contrib_v[i] = rng.uniform(-1.0, 1.0);
    contrib_a[i] = rng.uniform(-1.0, 1.0);
  }

  Dataset ds;
  ds.name = "synthetic";
  ds.instances.reserve(static_cast<std::size_t>(spec.n_instances));
  const auto span_tokens = static_cast<std::uint64_t>(
      spec.max_tokens_per_text - spec.min_tokens_per_text + 1);
  for (int n = 0; n < spec.n_instances; ++n) {
    const auto k = static_cast<std::size_t>(spec.min_tokens_per_text) +
                   static_cast<std::size_t>(rng.bounded(span_tokens));
    std::vector<std::size_t> tokens(k);
    for (auto& t : tokens) t = static_cast<std::size_t>(rng.bounded(vocab));
    const std::size_t aspect_pos = static_cast<std::size_t>(rng.bounded(k));
    const double noise_v = rng.normal(0.0, spec.valence_noise_sd);
    const double noise_a = rng.normal(0.0, spec.arousal_noise_sd);

    double sum_v = contrib_v[tokens[aspect_pos]];
    double sum_a = contrib_a[tokens[aspect_pos]];
    for (const auto t : tokens) {
      sum_v += contrib_v[t];
      sum_a += contrib_a[t];
    }
    const double denom = static_cast<double>(k + 1);
    const double latent_v = 5.0 + 2.0 * sum_v / denom;
    const double latent_a = 5.0 + 2.0 * sum_a / denom;

    Instance inst;
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "s%06d", n + 1);
    inst.id = idbuf;
    for (std::size_t i = 0; i < k; ++i) {
      if (i > 0) inst.text += ' ';
      inst.text += 't' + std::to_string(tokens[i]);
    }
    inst.aspect = 't' + std::to_string(tokens[aspect_pos]);
    inst.valence = std::clamp(latent_v + noise_v, 1.0, 9.0);
    inst.arousal = std::clamp(latent_a + noise_a, 1.0, 9.0);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

DatasetStats dataset_stats(const Dataset& ds) {
  if (ds.instances.empty() || !ds.fully_labeled()) {
    throw ValidationError("dataset_stats: requires a nonempty labeled dataset");
  }
  DatasetStats st;
  st.count = ds.size();
  const double n = static_cast<double>(st.count);
  for (const auto& inst : ds.instances) {
    st.mean_v += *inst.valence;
    st.mean_a += *inst.arousal;
  }
  st.mean_v /= n;
  st.mean_a /= n;
  double ssv = 0.0, ssa = 0.0;
  std::vector<double> lengths;
  lengths.reserve(st.count);
  for (const auto& inst : ds.instances) {
    ssv += (*inst.valence - st.mean_v) * (*inst.valence - st.mean_v);
    ssa += (*inst.arousal - st.mean_a) * (*inst.arousal - st.mean_a);
    std::istringstream ws(inst.text);
    std::string tok;
    std::size_t count = 0;
    while (ws >> tok) ++count;
    lengths.push_back(static_cast<double>(count));
  }
  st.sd_v = std::sqrt(ssv / n);
  st.sd_a = std::sqrt(ssa / n);
  std::sort(lengths.begin(), lengths.end());
  st.len_min = lengths.front();
  st.len_q25 = quantile(lengths, 0.25);
  st.len_median = quantile(lengths, 0.50);
  st.len_q75 = quantile(lengths, 0.75);
  st.len_max = lengths.back();
  return st;
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw ValidationError("rename failed for " + path.string() + ": " +
                          ec.message());
  }
}

}  // namespace vareg
