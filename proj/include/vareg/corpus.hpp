#pragma once

// Dataset representation and I/O.
//
// Datasets are stored as UTF-8 JSON-lines files, one record per line with
// fields id, text, aspect and optional numeric valence/arousal in [1, 9].
// Predictions are written as "id<TAB>V.VV#A.AA" lines.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vareg/types.hpp"

namespace vareg {

struct Instance {
  std::string id;
  std::string text;
  std::string aspect;  // may be empty; the featurizer substitutes "NULL"
  std::optional<double> valence;
  std::optional<double> arousal;
};

struct Dataset {
  std::string name;
  std::vector<Instance> instances;

  std::size_t size() const { return instances.size(); }
  bool fully_labeled() const;
};

// Synthetic corpus recipe. Per-token contributions are drawn once from the
// seed; each instance mixes a handful of tokens (the aspect token counted
// twice) into latent V/A scores around 5, then adds per-dimension Gaussian
// label noise. The asymmetric noise knobs make arousal measurably harder
// than valence, which is what the training diagnostics are probed with.
struct SynthSpec {
  int vocab_size = 200;
  int min_tokens_per_text = 5;
  int max_tokens_per_text = 15;
  double valence_noise_sd = 0.0;
  double arousal_noise_sd = 0.0;
  int n_instances = 0;
  std::uint64_t seed = 0;
};

struct DatasetStats {
  std::size_t count = 0;
  double mean_v = 0.0, mean_a = 0.0;
  double sd_v = 0.0, sd_a = 0.0;  // population SD
  // Whitespace-token counts per text.
  double len_min = 0.0, len_q25 = 0.0, len_median = 0.0, len_q75 = 0.0,
         len_max = 0.0;
};

Dataset load_dataset(const std::filesystem::path& path, bool require_labels);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Deterministic disjoint partition; dev gets round(dev_fraction * N)
// instances chosen by a seeded shuffle, both halves keep file order.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                          double dev_fraction,
                                          std::uint64_t seed);

// Clamp to [1, 9], round half away from zero to two decimals, emit
// "V.VV#A.AA". Rounding follows the shortest decimal representation of
// the value, so e.g. 5.005 formats as "5.01".
std::string format_va(double v, double a);
std::pair<double, double> parse_va(std::string_view s);

// One "id<TAB>V.VV#A.AA" line per instance, written atomically
// (temp file + rename), byte-deterministic.
void write_predictions(const std::filesystem::path& path,
                       std::span<const std::string> ids,
                       std::span<const VA> preds);
void write_predictions(const std::filesystem::path& path,
                       std::span<const Prediction> preds);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

Dataset generate_synthetic(const SynthSpec& spec);

DatasetStats dataset_stats(const Dataset& ds);

// Writes content to path via a temp file in the same directory, then
// renames. Used for every artifact the project emits.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace vareg
