#include "vareg/checkpoint.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vareg/corpus.hpp"
#include "vareg/error.hpp"
#include "vareg/rng.hpp"

namespace vareg {

namespace {

constexpr const char* kMagic = "vareg-checkpoint v1";

void append_double(std::string& out, double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

// Tensors are written as `tensor <name> <rows> <cols>` followed by one
// line per row; vectors are rows x 1.
void append_matrix(std::string& out, const char* name,
                   const Eigen::MatrixXd& m) {
  out += "tensor ";
  out += name;
  out += ' ';
  out += std::to_string(m.rows());
  out += ' ';
  out += std::to_string(m.cols());
  out += '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ' ';
      append_double(out, m(r, c));
    }
    out += '\n';
  }
}

void append_vector(std::string& out, const char* name,
                   const Eigen::VectorXd& v) {
  out += "tensor ";
  out += name;
  out += ' ';
  out += std::to_string(v.size());
  out += " 1\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    append_double(out, v(i));
    out += '\n';
  }
}

void append_scalar(std::string& out, const char* name, double x) {
  out += "scalar ";
  out += name;
  out += ' ';
  append_double(out, x);
  out += '\n';
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& p,
                     const ModelConfig& model_cfg,
                     const FeaturizerConfig& feat_cfg) {
  std::string out;
  out.reserve(static_cast<std::size_t>(p.embeddings.size()) * 24);
  out += kMagic;
  out += '\n';
  out += "model.embed_dim " + std::to_string(model_cfg.embed_dim) + "\n";
  out += "model.hidden_dim " + std::to_string(model_cfg.hidden_dim) + "\n";
  out += "model.dropout_rate ";
  append_double(out, model_cfg.dropout_rate);
  out += '\n';
  out += "model.uncertainty_enabled " +
         std::to_string(model_cfg.uncertainty_enabled ? 1 : 0) + "\n";
  out += "feat.bucket_count " + std::to_string(feat_cfg.bucket_count) + "\n";
  out += "feat.word_ngram_max " + std::to_string(feat_cfg.word_ngram_max) + "\n";
  out += "feat.char_ngram_min " + std::to_string(feat_cfg.char_ngram_min) + "\n";
  out += "feat.char_ngram_max " + std::to_string(feat_cfg.char_ngram_max) + "\n";
  out += "feat.lowercase " + std::to_string(feat_cfg.lowercase ? 1 : 0) + "\n";
  out += "feat.hash_seed " + std::to_string(feat_cfg.hash_seed) + "\n";
  char hashline[96];
  std::snprintf(hashline, sizeof(hashline),
                "hash.fnv1a64 offset=%" PRIu64 " prime=%" PRIu64 "\n",
                kFnv64Offset, kFnv64Prime);
  out += hashline;

  append_matrix(out, "embeddings", p.embeddings);
  append_matrix(out, "hidden_w", p.hidden_w);
  append_vector(out, "hidden_b", p.hidden_b);
  append_vector(out, "head_v_w", p.head_v_w);
  append_scalar(out, "head_v_b", p.head_v_b);
  append_vector(out, "head_a_w", p.head_a_w);
  append_scalar(out, "head_a_b", p.head_a_b);
  append_scalar(out, "logvar_v", p.logvar_v);
  append_scalar(out, "logvar_a", p.logvar_a);
  out += "end\n";
  atomic_write(path, out);
}

namespace {

class CheckpointReader {
 public:
  CheckpointReader(std::istream& in, std::string name)
      : in_(in), name_(std::move(name)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw ValidationError("checkpoint " + name_ + ": " + why);
  }

  std::string expect_line() {
    std::string line;
    if (!std::getline(in_, line)) fail("truncated file");
    return line;
  }

  long long expect_keyed_int(const std::string& key) {
    const auto line = expect_line();
    std::istringstream ls(line);
    std::string k;
    long long v = 0;
    if (!(ls >> k >> v) || k != key) fail("expected '" + key + "', got: " + line);
    return v;
  }

  std::uint64_t expect_keyed_u64(const std::string& key) {
    const auto line = expect_line();
    std::istringstream ls(line);
    std::string k;
    std::uint64_t v = 0;
    if (!(ls >> k >> v) || k != key) fail("expected '" + key + "', got: " + line);
    return v;
  }

  double expect_keyed_double(const std::string& key) {
    const auto line = expect_line();
    std::istringstream ls(line);
    std::string k;
    double v = 0;
    if (!(ls >> k >> v) || k != key) fail("expected '" + key + "', got: " + line);
    return v;
  }

  void read_tensor(const std::string& name, Eigen::Index rows,
                   Eigen::Index cols, Eigen::MatrixXd& m) {
    const auto header = expect_line();
    std::ostringstream want;
    want << "tensor " << name << ' ' << rows << ' ' << cols;
    if (header != want.str()) {
      fail("expected '" + want.str() + "', got: " + header);
    }
    m.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto line = expect_line();
      std::istringstream ls(line);
      for (Eigen::Index c = 0; c < cols; ++c) {
        double x;
        if (!(ls >> x)) fail("short row in tensor " + name);
        if (!std::isfinite(x)) fail("non-finite value in tensor " + name);
        m(r, c) = x;
      }
      std::string extra;
      if (ls >> extra) fail("trailing data in tensor " + name);
    }
  }

  double read_scalar(const std::string& name) {
    const auto line = expect_line();
    std::istringstream ls(line);
    std::string kind, k;
    double v = 0;
    if (!(ls >> kind >> k >> v) || kind != "scalar" || k != name) {
      fail("expected scalar " + name + ", got: " + line);
    }
    if (!std::isfinite(v)) fail("non-finite scalar " + name);
    return v;
  }

 private:
  std::istream& in_;
  std::string name_;
};

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  CheckpointReader r(in, path.string());
  if (r.expect_line() != kMagic) r.fail("bad magic (not a vareg checkpoint)");

  Checkpoint ck;
  ck.model.embed_dim = static_cast<int>(r.expect_keyed_int("model.embed_dim"));
  ck.model.hidden_dim =
      static_cast<int>(r.expect_keyed_int("model.hidden_dim"));
  ck.model.dropout_rate = r.expect_keyed_double("model.dropout_rate");
  ck.model.uncertainty_enabled =
      r.expect_keyed_int("model.uncertainty_enabled") != 0;
  ck.featurizer.bucket_count =
      static_cast<int>(r.expect_keyed_int("feat.bucket_count"));
  ck.featurizer.word_ngram_max =
      static_cast<int>(r.expect_keyed_int("feat.word_ngram_max"));
  ck.featurizer.char_ngram_min =
      static_cast<int>(r.expect_keyed_int("feat.char_ngram_min"));
  ck.featurizer.char_ngram_max =
      static_cast<int>(r.expect_keyed_int("feat.char_ngram_max"));
  ck.featurizer.lowercase = r.expect_keyed_int("feat.lowercase") != 0;
  ck.featurizer.hash_seed = r.expect_keyed_u64("feat.hash_seed");

  char hashline[96];
  std::snprintf(hashline, sizeof(hashline),
                "hash.fnv1a64 offset=%" PRIu64 " prime=%" PRIu64, kFnv64Offset,
                kFnv64Prime);
  if (r.expect_line() != hashline) {
    r.fail("hash constants do not match this build");
  }
  validate(ck.model);
  validate(ck.featurizer);

  const Eigen::Index de = ck.model.embed_dim;
  const Eigen::Index dh = ck.model.hidden_dim;
  Eigen::MatrixXd tmp;
  r.read_tensor("embeddings", ck.featurizer.bucket_count, de,
                ck.params.embeddings);
  r.read_tensor("hidden_w", 2 * de, dh, ck.params.hidden_w);
  r.read_tensor("hidden_b", dh, 1, tmp);
  ck.params.hidden_b = tmp.col(0);
  r.read_tensor("head_v_w", dh, 1, tmp);
  ck.params.head_v_w = tmp.col(0);
  ck.params.head_v_b = r.read_scalar("head_v_b");
  r.read_tensor("head_a_w", dh, 1, tmp);
  ck.params.head_a_w = tmp.col(0);
  ck.params.head_a_b = r.read_scalar("head_a_b");
  ck.params.logvar_v = r.read_scalar("logvar_v");
  ck.params.logvar_a = r.read_scalar("logvar_a");
  if (r.expect_line() != "end") r.fail("missing end marker");
  return ck;
}

}  // namespace vareg
