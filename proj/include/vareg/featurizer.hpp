#pragma once

// Hashed n-gram featurization of (text, aspect) pairs.
//
// Text and aspect are tokenized independently and kept as two separate
// index multisets so the model can pool them independently. Tokens are
// word n-grams over whitespace chunks plus character n-grams within each
// chunk (the latter keep the featurizer usable for scripts without
// spaces). Indices come from seeded 64-bit FNV-1a (constants in rng.hpp)
// modulo bucket_count, so a given config produces identical indices on
// every platform.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vareg {

struct FeaturizerConfig {
  int bucket_count = 4096;
  int word_ngram_max = 2;
  int char_ngram_min = 3;
  int char_ngram_max = 5;
  bool lowercase = true;  // ASCII case folding only
  std::uint64_t hash_seed = 0;
};

void validate(const FeaturizerConfig& cfg);

// Index multisets (multiplicity preserved, emission order fixed).
struct FeatureIndices {
  std::vector<std::uint32_t> text;
  std::vector<std::uint32_t> aspect;
};

// Only the first 128 whitespace chunks of a string are tokenized.
inline constexpr std::size_t kMaxChunks = 128;

std::vector<std::string> tokenize(std::string_view s,
                                  const FeaturizerConfig& cfg);

std::vector<std::uint32_t> hash_ngrams(const std::vector<std::string>& tokens,
                                       const FeaturizerConfig& cfg);

// An empty aspect stands for the null aspect and is encoded as the
// literal token "NULL".
FeatureIndices encode_pair(std::string_view text, std::string_view aspect,
                           const FeaturizerConfig& cfg);

}  // namespace vareg
