#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pilot/corpus_store.hpp"

namespace pilot {

/// Lowercased word tokens plus sentence boundaries. `sentence_bounds[i]`
/// is the token index one past the end of sentence i.
struct TokenStream {
  std::vector<std::string> tokens;
  std::vector<std::size_t> sentence_bounds;

  std::size_t sentence_count() const noexcept { return sentence_bounds.size(); }
};

/// Words are maximal runs of letters, digits and apostrophes (ASCII ' and
/// U+2019, folded to '), lowercased, with edge apostrophes dropped. A sentence ends at
/// '.', '!' or '?' followed by whitespace or end of text; trailing words
/// without a terminator form a final sentence. Throws Error(invalid_input)
/// "no tokens".
TokenStream tokenize(std::string_view text);

double type_token_ratio(const TokenStream& ts);
/// Unique contiguous n-grams over all n-grams, n in 1..4, across the whole
/// stream. Throws Error(invalid_input) "text shorter than n".
double ngram_diversity(const TokenStream& ts, int n);
double repetition_rate(const TokenStream& ts, int n);

struct CompressionResult {
  double ratio = 0.0;
  std::size_t original_bytes = 0;
  std::size_t compressed_bytes = 0;
  bool small_sample = false;  // fewer than 64 input bytes
};

/// Raw DEFLATE (no zlib/gzip container), level 6, 15-bit window, memLevel 8.
CompressionResult compression_ratio(std::string_view text);

/// Vowel-group heuristic: groups of a/e/i/o/u/y, minus one for a final
/// silent 'e' when there is more than one group, at least 1.
int syllable_count(std::string_view word);

/// Flesch-Kincaid grade: 0.39 * words/sentences + 11.8 * syllables/words - 15.59.
double fk_grade_level(const TokenStream& ts);

/// Number of Unicode scalar values in UTF-8 text.
std::size_t length_chars(std::string_view utf8);

inline constexpr int kMaxNgram = 4;
inline constexpr std::size_t kMinCompressionBytes = 64;

/// Scores for one text. Metrics whose precondition fails are absent.
struct TextDiversity {
  std::optional<double> ttr;
  std::array<std::optional<double>, kMaxNgram> ngram_diversity{};
  std::array<std::optional<double>, kMaxNgram> repetition{};
  std::optional<double> compression_ratio;
  bool compression_small_sample = false;
  std::optional<double> fk_grade;
  std::size_t length_chars = 0;
};

TextDiversity text_diversity(std::string_view text);

/// Group means of the per-text scores. A text failing a metric's
/// precondition is left out of that metric's mean and counted in
/// `exclusions[<metric>]`; a metric with no contributing text is absent.
struct DiversityScores {
  std::size_t n_texts = 0;
  std::optional<double> ttr;
  std::array<std::optional<double>, kMaxNgram> ngram_diversity{};
  std::array<std::optional<double>, kMaxNgram> repetition{};
  std::optional<double> compression_ratio;
  std::optional<double> fk_grade;
  std::optional<double> length_chars;
  std::size_t compression_small_samples = 0;
  std::map<std::string, std::size_t> exclusions;
};

DiversityScores diversity_summary(std::span<const std::string> texts);
DiversityScores diversity_summary(std::span<const ResponseRecord> group);

}  // namespace pilot
