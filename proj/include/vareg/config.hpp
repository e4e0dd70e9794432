#pragma once

// Experiment configuration: a plain-text file of dotted `key = value`
// lines ('#' starts a comment) plus command-line overrides (flags win).
// The canonical form (sorted keys) is hashed to name run directories, so
// identical configs land in identical paths.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vareg/trainer.hpp"

namespace vareg {

class KeyValues {
 public:
  static KeyValues parse_file(const std::filesystem::path& path);
  static KeyValues parse_text(std::string_view text, const std::string& where);

  void set(const std::string& key, const std::string& value);
  // "key=value" form used by --set overrides.
  void set_pair(const std::string& pair);

  bool has(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key, double fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<std::uint64_t> u64_list(const std::string& key) const;

  // Sorted "key = value" lines.
  std::string canonical() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct ExperimentConfig {
  std::filesystem::path train_path;
  std::filesystem::path dev_path;
  std::optional<std::filesystem::path> test_path;
  std::filesystem::path out_dir = "runs";
  std::vector<std::uint64_t> seeds;
  TrainConfig train;
};

// Rejects unknown keys so config typos fail loudly.
ExperimentConfig experiment_from_keyvalues(const KeyValues& kv);

std::uint64_t config_hash(const KeyValues& kv);
std::string config_hash_hex(const KeyValues& kv);

}  // namespace vareg
