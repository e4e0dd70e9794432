#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <set>

#include "doctest.h"
#include "vareg/error.hpp"
#include "vareg/featurizer.hpp"
#include "vareg/rng.hpp"

using namespace vareg;

namespace {

bool contains(const std::vector<std::string>& tokens, const std::string& t) {
  return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
}

}  // namespace

TEST_CASE("tokenize emits word and char n-grams") {
  FeaturizerConfig cfg;
  const auto tokens = tokenize("Good food", cfg);
  CHECK(contains(tokens, "good"));
  CHECK(contains(tokens, "food"));
  CHECK(contains(tokens, "good food"));
  CHECK(contains(tokens, "goo"));
  CHECK(contains(tokens, "ood"));
  CHECK(contains(tokens, "foo"));
  CHECK(contains(tokens, "good"));
  // enumerated by hand: 2 unigrams + 1 bigram + (2+1) 3/4-grams per word
  CHECK(tokens.size() == 2 + 1 + 2 * 3);
}

TEST_CASE("tokenize handles empty input and case folding") {
  FeaturizerConfig cfg;
  CHECK(tokenize("", cfg).empty());
  CHECK(tokenize("   \t\n ", cfg).empty());
  CHECK(tokenize("FOOD", cfg) == tokenize("food", cfg));
  FeaturizerConfig nocase = cfg;
  nocase.lowercase = false;
  CHECK(tokenize("FOOD", nocase) != tokenize("food", nocase));
}

TEST_CASE("tokenize splits CJK text into char n-grams") {
  FeaturizerConfig cfg;
  const auto tokens = tokenize("賣像最差", cfg);
  // one 4-codepoint chunk: unigram + two 3-grams + one 4-gram
  CHECK(contains(tokens, "賣像最差"));
  CHECK(contains(tokens, "賣像最"));
  CHECK(contains(tokens, "像最差"));
}

TEST_CASE("tokenize caps at the first 128 chunks") {
  FeaturizerConfig cfg;
  cfg.word_ngram_max = 1;
  cfg.char_ngram_min = 3;
  cfg.char_ngram_max = 3;
  std::string long_text, capped_text;
  for (int i = 0; i < 200; ++i) {
    long_text += "w" + std::to_string(i) + " ";
    if (i < 128) capped_text += "w" + std::to_string(i) + " ";
  }
  CHECK(tokenize(long_text, cfg) == tokenize(capped_text, cfg));
}

TEST_CASE("hash_ngrams is deterministic and in range") {
  FeaturizerConfig cfg;
  CHECK(hash_ngrams({}, cfg).empty());
  const std::vector<std::string> tokens{"good", "food", "good food", "goo"};
  const auto a = hash_ngrams(tokens, cfg);
  const auto b = hash_ngrams(tokens, cfg);
  CHECK(a == b);
  REQUIRE(a.size() == 4);
  for (const auto idx : a) CHECK(idx < 4096u);

  // the documented hash: seeded FNV-1a mod bucket_count
  CHECK(a[0] == fnv1a64("good", cfg.hash_seed) % 4096);

  FeaturizerConfig reseeded = cfg;
  reseeded.hash_seed = 99;
  CHECK(hash_ngrams(tokens, reseeded) != a);
}

TEST_CASE("hash_ngrams range holds over random strings") {
  FeaturizerConfig cfg;
  cfg.bucket_count = 61;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    const auto len = 1 + rng.bounded(12);
    for (std::uint64_t k = 0; k < len; ++k) {
      s += static_cast<char>('a' + rng.bounded(26));
    }
    for (const auto idx : hash_ngrams(tokenize(s, cfg), cfg)) {
      CHECK(idx < 61u);
    }
  }
}

TEST_CASE("encode_pair keeps segments separate") {
  FeaturizerConfig cfg;
  const auto enc = encode_pair("the food was great", "food", cfg);
  CHECK_FALSE(enc.text.empty());
  CHECK_FALSE(enc.aspect.empty());

  const auto enc2 = encode_pair("the food was great", "food", cfg);
  CHECK(enc.text == enc2.text);
  CHECK(enc.aspect == enc2.aspect);

  // locality: editing the aspect never moves text indices
  const auto enc3 = encode_pair("the food was great", "service", cfg);
  CHECK(enc3.text == enc.text);
  CHECK(enc3.aspect != enc.aspect);

  // swapped segments land in the other multiset
  const auto sw = encode_pair("food", "the food was great", cfg);
  CHECK(sw.text == enc.aspect);
  CHECK(sw.aspect == enc.text);
}

TEST_CASE("empty aspect becomes the NULL token") {
  FeaturizerConfig cfg;
  const auto enc = encode_pair("some text", "", cfg);
  CHECK(enc.aspect == hash_ngrams(tokenize("NULL", cfg), cfg));
}

TEST_CASE("featurizer config validation") {
  FeaturizerConfig cfg;
  cfg.bucket_count = 1;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = FeaturizerConfig{};
  cfg.char_ngram_min = 5;
  cfg.char_ngram_max = 3;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = FeaturizerConfig{};
  cfg.word_ngram_max = 0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
}
