#include "pilot/diversity_metrics.hpp"

#include <cstring>
#include <unordered_map>
#include <unordered_set>

#include <zlib.h>

#include "pilot/error.hpp"

namespace pilot {
namespace {

constexpr char32_t kInvalid = 0xFFFD;

// Decodes one scalar value starting at `pos` and advances it. Malformed
// sequences consume one byte and decode as U+FFFD.
char32_t next_codepoint(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kInvalid;
  }
  if (pos + static_cast<std::size_t>(len) > s.size()) {
    ++pos;
    return kInvalid;
  }
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + static_cast<std::size_t>(i)]);
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019; }

// Letters and digits: ASCII, Latin-1/Latin Extended letters, and the
// letter-bearing script blocks (Greek through Ethiopic/Latin Extended
// Additional, kana, CJK, Hangul). General punctuation and symbol blocks
// are excluded.
bool is_word_char(char32_t cp) {
  if (cp < 0x80) return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9');
  if (cp >= 0xC0 && cp <= 0x24F) return cp != 0xD7 && cp != 0xF7;
  if (cp >= 0x370 && cp <= 0x1FFF) return true;
  if (cp >= 0x3040 && cp <= 0x9FFF) return true;
  if (cp >= 0xAC00 && cp <= 0xD7AF) return true;
  return false;
}

char32_t to_lower(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x391 && cp <= 0x3A9) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  return cp;
}

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' || cp == U'\v' || cp == 0xA0 ||
         cp == 0x2028 || cp == 0x2029 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x3000;
}

double mean(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

TokenStream tokenize(std::string_view text) {
  if (text.empty()) throw Error(ErrorKind::invalid_input, "no tokens");
  TokenStream ts;
  std::string word;
  bool word_has_alnum = false;
  auto flush = [&] {
    if (word_has_alnum) {
      std::size_t b = 0;
      std::size_t e = word.size();
      while (b < e && word[b] == '\'') ++b;
      while (e > b && word[e - 1] == '\'') --e;
      ts.tokens.push_back(word.substr(b, e - b));
    }
    word.clear();
    word_has_alnum = false;
  };
  auto close_sentence = [&] {
    const std::size_t last = ts.sentence_bounds.empty() ? 0 : ts.sentence_bounds.back();
    if (ts.tokens.size() > last) ts.sentence_bounds.push_back(ts.tokens.size());
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const char32_t cp = next_codepoint(text, pos);
    if (is_word_char(cp)) {
      append_utf8(word, to_lower(cp));
      word_has_alnum = true;
      continue;
    }
    if (is_apostrophe(cp)) {
      word.push_back('\'');
      continue;
    }
    flush();
    if (cp == U'.' || cp == U'!' || cp == U'?') {
      std::size_t peek = pos;
      if (peek >= text.size() || is_space(next_codepoint(text, peek))) close_sentence();
    }
  }
  flush();
  close_sentence();
  if (ts.tokens.empty()) throw Error(ErrorKind::invalid_input, "no tokens");
  return ts;
}

double type_token_ratio(const TokenStream& ts) {
  if (ts.tokens.empty()) throw Error(ErrorKind::invalid_input, "empty token stream");
  std::unordered_set<std::string_view> unique(ts.tokens.begin(), ts.tokens.end());
  return static_cast<double>(unique.size()) / static_cast<double>(ts.tokens.size());
}

double ngram_diversity(const TokenStream& ts, int n) {
  if (n < 1 || n > kMaxNgram) throw Error(ErrorKind::invalid_input, "n must be in 1..4");
  const std::size_t len = static_cast<std::size_t>(n);
  if (ts.tokens.size() < len) throw Error(ErrorKind::invalid_input, "text shorter than n");

  std::unordered_map<std::string_view, std::uint32_t> ids;
  std::vector<std::uint32_t> seq;
  seq.reserve(ts.tokens.size());
  for (const auto& t : ts.tokens) {
    auto [it, inserted] = ids.try_emplace(t, static_cast<std::uint32_t>(ids.size()));
    seq.push_back(it->second);
  }
  const std::size_t total = seq.size() - len + 1;
  std::unordered_set<std::string> grams;
  grams.reserve(total);
  std::string key(len * sizeof(std::uint32_t), '\0');
  for (std::size_t i = 0; i < total; ++i) {
    std::memcpy(key.data(), seq.data() + i, key.size());
    grams.insert(key);
  }
  return static_cast<double>(grams.size()) / static_cast<double>(total);
}

double repetition_rate(const TokenStream& ts, int n) { return 1.0 - ngram_diversity(ts, n); }

CompressionResult compression_ratio(std::string_view text) {
  if (text.empty()) throw Error(ErrorKind::invalid_input, "compression_ratio: empty text");
  z_stream zs{};
  if (deflateInit2(&zs, 6, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(ErrorKind::invalid_input, "compression_ratio: deflateInit2 failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(text.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
  zs.avail_in = static_cast<uInt>(text.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorKind::invalid_input, "compression_ratio: deflate failed");

  CompressionResult r;
  r.original_bytes = text.size();
  r.compressed_bytes = produced;
  r.ratio = static_cast<double>(produced) / static_cast<double>(text.size());
  r.small_sample = text.size() < kMinCompressionBytes;
  return r;
}

int syllable_count(std::string_view word) {
  auto vowel = [](char c) {
    switch (c) {
      case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      case 'A': case 'E': case 'I': case 'O': case 'U': case 'Y':
        return true;
      default:
        return false;
    }
  };
  int groups = 0;
  bool in_group = false;
  for (char c : word) {
    const bool v = vowel(c);
    if (v && !in_group) ++groups;
    in_group = v;
  }
  if (groups > 1 && !word.empty() && (word.back() == 'e' || word.back() == 'E')) --groups;
  return std::max(groups, 1);
}

double fk_grade_level(const TokenStream& ts) {
  if (ts.tokens.empty() || ts.sentence_bounds.empty()) {
    throw Error(ErrorKind::invalid_input, "empty token stream");
  }
  std::size_t syllables = 0;
  for (const auto& t : ts.tokens) syllables += static_cast<std::size_t>(syllable_count(t));
  const double words = static_cast<double>(ts.tokens.size());
  const double sentences = static_cast<double>(ts.sentence_bounds.size());
  return 0.39 * (words / sentences) + 11.8 * (static_cast<double>(syllables) / words) - 15.59;
}

std::size_t length_chars(std::string_view utf8) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < utf8.size()) {
    next_codepoint(utf8, pos);
    ++n;
  }
  return n;
}

TextDiversity text_diversity(std::string_view text) {
  TextDiversity d;
  d.length_chars = length_chars(text);
  if (!text.empty()) {
    const auto c = compression_ratio(text);
    d.compression_ratio = c.ratio;
    d.compression_small_sample = c.small_sample;
  }
  TokenStream ts;
  try {
    ts = tokenize(text);
  } catch (const Error&) {
    return d;
  }
  d.ttr = type_token_ratio(ts);
  for (int n = 1; n <= kMaxNgram; ++n) {
    if (ts.tokens.size() < static_cast<std::size_t>(n)) continue;
    const double div = ngram_diversity(ts, n);
    d.ngram_diversity[static_cast<std::size_t>(n - 1)] = div;
    d.repetition[static_cast<std::size_t>(n - 1)] = 1.0 - div;
  }
  d.fk_grade = fk_grade_level(ts);
  return d;
}

DiversityScores diversity_summary(std::span<const std::string> texts) {
  if (texts.empty()) throw Error(ErrorKind::invalid_input, "diversity_summary: empty group");
  DiversityScores out;
  out.n_texts = texts.size();

  std::vector<double> ttr, compression, fk, length;
  std::array<std::vector<double>, kMaxNgram> ngram;
  for (const auto& text : texts) {
    const TextDiversity d = text_diversity(text);
    length.push_back(static_cast<double>(d.length_chars));
    if (d.ttr) {
      ttr.push_back(*d.ttr);
    } else {
      ++out.exclusions["ttr"];
    }
    if (d.fk_grade) {
      fk.push_back(*d.fk_grade);
    } else {
      ++out.exclusions["fk_grade"];
    }
    if (d.compression_ratio) {
      compression.push_back(*d.compression_ratio);
      if (d.compression_small_sample) ++out.compression_small_samples;
    } else {
      ++out.exclusions["compression_ratio"];
    }
    for (std::size_t i = 0; i < ngram.size(); ++i) {
      if (d.ngram_diversity[i]) {
        ngram[i].push_back(*d.ngram_diversity[i]);
      } else {
        ++out.exclusions["ngram_" + std::to_string(i + 1)];
      }
    }
  }
  if (!ttr.empty()) out.ttr = mean(ttr);
  if (!fk.empty()) out.fk_grade = mean(fk);
  if (!compression.empty()) out.compression_ratio = mean(compression);
  out.length_chars = mean(length);
  for (std::size_t i = 0; i < ngram.size(); ++i) {
    if (ngram[i].empty()) continue;
    out.ngram_diversity[i] = mean(ngram[i]);
    out.repetition[i] = 1.0 - *out.ngram_diversity[i];
  }
  return out;
}

DiversityScores diversity_summary(std::span<const ResponseRecord> group) {
  std::vector<std::string> texts;
  texts.reserve(group.size());
  for (const auto& r : group) texts.push_back(r.response_text);
  return diversity_summary(texts);
}

}  // namespace pilot
