#include "vareg/featurizer.hpp"

#include "vareg/error.hpp"
#include "vareg/rng.hpp"

namespace vareg {

void validate(const FeaturizerConfig& cfg) {
  if (cfg.bucket_count < 2) {
    throw ValidationError("featurizer: bucket_count must be >= 2");
  }
  if (cfg.word_ngram_max < 1) {
    throw ValidationError("featurizer: word_ngram_max must be >= 1");
  }
  if (cfg.char_ngram_min < 1 || cfg.char_ngram_max < cfg.char_ngram_min) {
    throw ValidationError("featurizer: char n-gram range must be nondecreasing");
  }
}

namespace {

bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

// Minimal UTF-8 decoder; an invalid lead or truncated sequence is taken
// as a single-byte code point so tokenization never fails.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = b0;
  if ((b0 & 0x80u) == 0x00u) {
    len = 1;
  } else if ((b0 & 0xE0u) == 0xC0u) {
    len = 2;
    cp = b0 & 0x1Fu;
  } else if ((b0 & 0xF0u) == 0xE0u) {
    len = 3;
    cp = b0 & 0x0Fu;
  } else if ((b0 & 0xF8u) == 0xF0u) {
    len = 4;
    cp = b0 & 0x07u;
  } else {
    ++i;
    return b0;
  }
  if (i + len > s.size()) {
    ++i;
    return b0;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0u) != 0x80u) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (bk & 0x3Fu);
  }
  i += len;
  return cp;
}

struct Chunk {
  std::string bytes;                     // possibly case-folded
  std::vector<std::size_t> cp_offsets;   // byte offset of each code point
};

std::vector<Chunk> split_chunks(std::string_view s, bool lowercase) {
  std::vector<Chunk> chunks;
  Chunk cur;
  std::size_t i = 0;
  const auto flush = [&]() {
    if (!cur.bytes.empty()) {
      if (chunks.size() < kMaxChunks) chunks.push_back(std::move(cur));
      cur = Chunk{};
    }
  };
  while (i < s.size()) {
    const std::size_t start = i;
    char32_t cp = decode_utf8(s, i);
    if (is_unicode_space(cp)) {
      flush();
      continue;
    }
    cur.cp_offsets.push_back(cur.bytes.size());
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (lowercase && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      cur.bytes.push_back(c);
    } else {
      cur.bytes.append(s.substr(start, i - start));
    }
  }
  flush();
  return chunks;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s,
                                  const FeaturizerConfig& cfg) {
  validate(cfg);
  const auto chunks = split_chunks(s, cfg.lowercase);
  std::vector<std::string> tokens;

  // word n-grams over the chunk sequence, joined by a single space
  for (int n = 1; n <= cfg.word_ngram_max; ++n) {
    if (chunks.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t i = 0; i + n <= chunks.size(); ++i) {
      std::string gram = chunks[i].bytes;
      for (std::size_t k = 1; k < static_cast<std::size_t>(n); ++k) {
        gram += ' ';
        gram += chunks[i + k].bytes;
      }
      tokens.push_back(std::move(gram));
    }
  }

  // character n-grams within each chunk, over code points
  for (const auto& chunk : chunks) {
    const auto m = chunk.cp_offsets.size();
    for (int n = cfg.char_ngram_min; n <= cfg.char_ngram_max; ++n) {
      if (m < static_cast<std::size_t>(n)) break;
      for (std::size_t i = 0; i + n <= m; ++i) {
        const std::size_t begin = chunk.cp_offsets[i];
        const std::size_t end = (i + n < m) ? chunk.cp_offsets[i + n]
                                            : chunk.bytes.size();
        tokens.push_back(chunk.bytes.substr(begin, end - begin));
      }
    }
  }
  return tokens;
}

std::vector<std::uint32_t> hash_ngrams(const std::vector<std::string>& tokens,
                                       const FeaturizerConfig& cfg) {
  validate(cfg);
  std::vector<std::uint32_t> indices;
  indices.reserve(tokens.size());
  const auto buckets = static_cast<std::uint64_t>(cfg.bucket_count);
  for (const auto& tok : tokens) {
    indices.push_back(
        static_cast<std::uint32_t>(fnv1a64(tok, cfg.hash_seed) % buckets));
  }
  return indices;
}

FeatureIndices encode_pair(std::string_view text, std::string_view aspect,
                           const FeaturizerConfig& cfg) {
  FeatureIndices out;
  out.text = hash_ngrams(tokenize(text, cfg), cfg);
  const std::string_view effective_aspect = aspect.empty() ? "NULL" : aspect;
  out.aspect = hash_ngrams(tokenize(effective_aspect, cfg), cfg);
  return out;
}

}  // namespace vareg
