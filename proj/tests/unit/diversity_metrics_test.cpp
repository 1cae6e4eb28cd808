#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "pilot/diversity_metrics.hpp"
#include "pilot/error.hpp"
#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace pilot;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Tokenize, WordsApostrophesAndSentences) {
  const auto ts = tokenize("Don't stop! It's 'quoted' here. Trailing words");
  EXPECT_EQ(ts.tokens, (std::vector<std::string>{"don't", "stop", "it's", "quoted", "here", "trailing", "words"}));
  EXPECT_EQ(ts.sentence_bounds, (std::vector<std::size_t>{2, 5, 7}));
  EXPECT_EQ(tokenize("3.14 is pi").sentence_count(), 1u);
}

TEST(Tokenize, UnicodeLettersAndCase) {
  const auto ts = tokenize("\xC3\x89T\xC3\x89 Caf\xC3\xA9 \xCE\x91\xCE\xB8\xCE\xAE\xCE\xBD\xCE\xB1 \xD0\x9C\xD0\xB8\xD1\x80 it\xE2\x80\x99s");
  EXPECT_EQ(ts.tokens, (std::vector<std::string>{"\xC3\xA9t\xC3\xA9", "caf\xC3\xA9", "\xCE\xB1\xCE\xB8\xCE\xAE\xCE\xBD\xCE\xB1",
                                                 "\xD0\xBC\xD0\xB8\xD1\x80", "it's"}));
  EXPECT_THROW(tokenize(" ... !!! "), Error);
}

TEST(Lexical, HandValues) {
  EXPECT_DOUBLE_EQ(type_token_ratio(tokenize("to be or not to be")), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(ngram_diversity(tokenize("a b a b"), 2), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(repetition_rate(tokenize("a b a b"), 2), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(ngram_diversity(tokenize("a a a a"), 1), 0.25);
  EXPECT_THROW(ngram_diversity(tokenize("a b"), 3), Error);
  EXPECT_THROW(ngram_diversity(tokenize("a b"), 5), Error);
}

TEST(Lexical, DiversityPlusRepetitionIsOne) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 1000; ++t) {
    const int vocab = 1 + static_cast<int>(rng() % 12);
    const int len = 4 + static_cast<int>(rng() % 60);
    std::string text;
    std::vector<std::string> words;
    for (int i = 0; i < len; ++i) {
      words.push_back("w" + std::to_string(rng() % vocab));
      text += words.back() + " ";
    }
    const auto ts = tokenize(text);
    for (int n = 1; n <= 4; ++n) {
      const double d = ngram_diversity(ts, n);
      EXPECT_NEAR(d, oracle::ngram_diversity(words, static_cast<std::size_t>(n)), 1e-15);
      EXPECT_EQ(d + repetition_rate(ts, n), 1.0);
    }
  }
}

TEST(Readability, SyllablesAndGrade) {
  EXPECT_EQ(syllable_count("cat"), 1);
  EXPECT_EQ(syllable_count("make"), 1);
  EXPECT_EQ(syllable_count("the"), 1);
  EXPECT_EQ(syllable_count("syllable"), 2);  // heuristic: y-l-a-b-l-e groups minus silent e
  EXPECT_EQ(syllable_count("rhythm"), 1);
  EXPECT_EQ(syllable_count("banana"), 3);
  EXPECT_EQ(syllable_count("xyz"), 1);
  EXPECT_NEAR(fk_grade_level(tokenize("The cat sat.")), -2.62, 1e-9);
  // 7 words, 2 sentences, 9 syllables.
  EXPECT_NEAR(fk_grade_level(tokenize("The banana fell. A dog ate it.")),
              0.39 * 7.0 / 2.0 + 11.8 * 9.0 / 7.0 - 15.59, 1e-12);
}

TEST(Compression, PinnedRawDeflate) {
  const std::string text = slurp(testpaths::data() / "english_1k.txt");
  const auto r = compression_ratio(text);
  EXPECT_EQ(r.original_bytes, 1007u);
  EXPECT_EQ(r.compressed_bytes, 562u);  // zlib level 6, wbits -15, memLevel 8
  EXPECT_GT(r.ratio, 0.2);
  EXPECT_LT(r.ratio, 0.8);
  EXPECT_FALSE(r.small_sample);

  std::string rep;
  for (int i = 0; i < 21; ++i) rep += "abc ";
  rep += "abc";
  const auto low = compression_ratio(rep);
  EXPECT_EQ(low.compressed_bytes, 9u);
  EXPECT_LT(low.ratio, r.ratio);
  EXPECT_TRUE(compression_ratio("short").small_sample);
}

TEST(Length, CountsScalarValues) {
  EXPECT_EQ(length_chars("abc"), 3u);
  EXPECT_EQ(length_chars("caf\xC3\xA9"), 4u);
  EXPECT_EQ(length_chars("\xF0\x9F\x98\x80"), 1u);
}

TEST(Summary, MeansAndExclusions) {
  const std::vector<std::string> texts{"to be or not to be", "a b a b", "single"};
  const auto s = diversity_summary(texts);
  EXPECT_EQ(s.n_texts, 3u);
  EXPECT_NEAR(*s.ttr, (2.0 / 3.0 + 0.5 + 1.0) / 3.0, 1e-15);
  // "single" has no bigram.
  EXPECT_NEAR(*s.ngram_diversity[1], (4.0 / 5.0 + 2.0 / 3.0) / 2.0, 1e-15);
  EXPECT_EQ(s.exclusions.at("ngram_2"), 1u);
  EXPECT_EQ(s.exclusions.at("ngram_4"), 1u);
  EXPECT_NEAR(*s.repetition[1], 1.0 - *s.ngram_diversity[1], 1e-15);
  EXPECT_EQ(s.compression_small_samples, 3u);
  EXPECT_NEAR(*s.length_chars, (18.0 + 7.0 + 6.0) / 3.0, 1e-12);
}
