#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "pilot/error.hpp"
#include "pilot/quality_stats.hpp"
#include "support/oracles.hpp"

using namespace pilot;

namespace {

ResponseRecord with_text(std::string text) {
  ResponseRecord r;
  r.id = "r";
  r.response_text = std::move(text);
  return r;
}

const char* const kNegativeControls[] = {
    "It works as a charm.",
    "The results are clear.",
    "As a result, the plan failed.",
    "As a whole, the team did well.",
    "I am a bit tired today.",
    "This serves as a reminder to rest.",
    "She was known as a gifted painter.",
    "We met as a group on Friday.",
    "As usual, the bus was late.",
    "I am happy to help.",
    "Being on time matters.",
    "Speaking of rain, bring an umbrella.",
    "They treated it as an exception.",
    "He spoke as an expert would.",
    "As soon as possible, please reply.",
    "The asana was difficult.",
    "Hello there. Has anyone seen my keys?",
    "I am not sure about this.",
    "As a rule, we start at nine.",
    "Call me as early as you can.",
};

}  // namespace

TEST(PersonaRepetition, Positives) {
  const std::string text = "As a researcher, I believe...";
  const auto f = persona_repetition_flag(text);
  EXPECT_TRUE(f.persona_repetition);
  ASSERT_EQ(f.matched_spans.size(), 1u);
  EXPECT_EQ(f.matched_spans[0].first, 0u);
  EXPECT_EQ(text.substr(0, f.matched_spans[0].second), "As a researcher");

  const std::string later = "Good question. \"as an engineer, I'd say no.";
  const auto g = persona_repetition_flag(later);
  ASSERT_TRUE(g.persona_repetition);
  const auto [s, e] = g.matched_spans.at(0);
  EXPECT_EQ(later.substr(s, e - s), "as an engineer");

  EXPECT_TRUE(persona_repetition_flag("I am a teacher, and this matters.").persona_repetition);
  EXPECT_TRUE(persona_repetition_flag("Hi!\nBeing a nurse, I know.").persona_repetition);
  EXPECT_TRUE(persona_repetition_flag("Well; speaking as someone who cooks, yes.").persona_repetition);
  EXPECT_TRUE(persona_repetition_flag("AS A CHEF I cook.").persona_repetition);
}

TEST(PersonaRepetition, NegativeControls) {
  static_assert(std::size(kNegativeControls) == 20);
  for (const char* text : kNegativeControls) {
    const auto f = persona_repetition_flag(text);
    EXPECT_FALSE(f.persona_repetition) << text;
    EXPECT_TRUE(f.matched_spans.empty()) << text;
  }
}

TEST(PersonaRepetition, SpansIndexOriginalText) {
  const std::string text = "Intro line.  As a pilot, I fly. Later: I am an artist. Not as a joke.";
  const auto f = persona_repetition_flag(text);
  ASSERT_EQ(f.matched_spans.size(), 2u);
  EXPECT_EQ(text.substr(f.matched_spans[0].first, f.matched_spans[0].second - f.matched_spans[0].first), "As a pilot");
  EXPECT_EQ(text.substr(f.matched_spans[1].first, f.matched_spans[1].second - f.matched_spans[1].first),
            "I am an artist");
  EXPECT_EQ(persona_repetition_flag(text).matched_spans, f.matched_spans);
}

TEST(PatternSetFile, ParseAndErrors) {
  const auto& b = PatternSet::bundled();
  EXPECT_EQ(b.version(), "1");
  EXPECT_EQ(b.size(), 4u);
  const auto custom = PatternSet::parse("version: 9\n---\nhello\n");
  EXPECT_EQ(custom.version(), "9");
  EXPECT_TRUE(persona_repetition_flag("Hello world", custom).persona_repetition);
  EXPECT_FALSE(persona_repetition_flag("Say hello", custom).persona_repetition);
  EXPECT_THROW(PatternSet::parse("version: 1\nhello\n"), Error);
  EXPECT_THROW(PatternSet::parse("---\nhello\n"), Error);
  EXPECT_THROW(PatternSet::parse("version: 1\n---\n"), Error);
}

TEST(Placeholder, Cases) {
  const std::string dear = "Dear [Professor's Name],";
  const auto f = placeholder_flag(dear);
  EXPECT_TRUE(f.placeholder);
  ASSERT_EQ(f.matched_spans.size(), 1u);
  EXPECT_EQ(f.matched_spans[0], (std::pair<std::size_t, std::size_t>{5, 23}));
  EXPECT_TRUE(placeholder_flag("Sign: [insert date]").placeholder);
  EXPECT_TRUE(placeholder_flag("[TODO] fix").placeholder);
  EXPECT_FALSE(placeholder_flag("array[3]").placeholder);
  EXPECT_FALSE(placeholder_flag("list[i]").placeholder);
  EXPECT_FALSE(placeholder_flag("see [1] and [X]").placeholder);
  EXPECT_FALSE(placeholder_flag("[Your\nName]").placeholder);
  EXPECT_FALSE(placeholder_flag("no brackets at all").placeholder);
}

TEST(FlagRate, ExactFractions) {
  std::vector<ResponseRecord> g{with_text("As a chef, I cook."), with_text("plain"), with_text("plain too"),
                                with_text("still plain")};
  EXPECT_EQ(flag_rate(g, QualityFlag::persona_repetition), 0.25);
  EXPECT_EQ(flag_rate(g, QualityFlag::placeholder), 0.0);
  for (auto& r : g) r.response_text = "Hi [Your Name]";
  EXPECT_EQ(flag_rate(g, QualityFlag::placeholder), 1.0);
  g.resize(3);
  g[0].response_text = "x";
  EXPECT_NEAR(flag_rate(g, QualityFlag::placeholder), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(flag_rate(std::vector<ResponseRecord>{}, QualityFlag::placeholder), Error);
}

TEST(Anova, HandValues) {
  const auto r = one_way_anova({{1, 2}, {3, 4}});
  EXPECT_NEAR(r.statistic, 8.0, 1e-9);
  EXPECT_EQ(r.df_between, 1);
  EXPECT_EQ(r.df_within, 2);
  const auto zero = one_way_anova({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  EXPECT_EQ(zero.statistic, 0.0);
  EXPECT_EQ(zero.df_between, 2);
  EXPECT_EQ(zero.df_within, 6);
  try {
    one_way_anova({{1, 1}, {2, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
    EXPECT_STREQ(e.what(), "zero within-group variance");
  }
  EXPECT_THROW(one_way_anova({{1, 2}, {3}}), Error);
  EXPECT_THROW(one_way_anova({{1, 2}}), Error);
}

TEST(Anova, InvariancesAndTSquared) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(2 + rng() % 10), b(2 + rng() % 10);
    for (double& x : a) x = nd(rng);
    for (double& x : b) x = nd(rng) + 0.5;
    const double f = one_way_anova({a, b}).statistic;
    const double tt = oracle::pooled_t(a, b);
    EXPECT_NEAR(f, tt * tt, 1e-9 * std::max(1.0, f));

    auto shift = [](std::vector<double> v, double c, double m) {
      for (double& x : v) x = x * m + c;
      return v;
    };
    EXPECT_NEAR(one_way_anova({shift(a, 5.0, 1.0), shift(b, 5.0, 1.0)}).statistic, f, 1e-9 * std::max(1.0, f));
    EXPECT_NEAR(one_way_anova({shift(a, 0.0, 3.5), shift(b, 0.0, 3.5)}).statistic, f, 1e-9 * std::max(1.0, f));
    EXPECT_GE(f, 0.0);
  }
}

TEST(KruskalWallis, HandValues) {
  const auto r = kruskal_wallis({{1, 2}, {3, 4}});
  EXPECT_NEAR(r.statistic, 2.4, 1e-9);
  EXPECT_EQ(r.df_between, 1);
  EXPECT_FALSE(r.df_within);
  EXPECT_NEAR(kruskal_wallis({{1, 3}, {2, 4}}).statistic, 0.6, 1e-9);
  // Ties: ranks {1.5,1.5,3.5,3.5}, R = {3,7}; raw H = 2.4, correction 1 - 12/60.
  EXPECT_NEAR(kruskal_wallis({{1, 1}, {2, 2}}).statistic, 2.4 / 0.8, 1e-9);
  try {
    kruskal_wallis({{5, 5}, {5, 5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "all values tied");
  }
  EXPECT_THROW(kruskal_wallis({{1, 2, 3}}), Error);
}

TEST(KruskalWallis, MonotoneInvariance) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::vector<double>> g(2 + rng() % 3);
    for (auto& v : g) {
      v.resize(1 + rng() % 6);
      for (double& x : v) x = static_cast<double>(rng() % 7);
    }
    g[0].push_back(-1.0);  // at least two distinct values
    const double h = kruskal_wallis(g).statistic;
    auto mapped = g;
    for (auto& v : mapped) {
      for (double& x : v) x = std::exp(x / 3.0) * 10.0 - 4.0;
    }
    EXPECT_NEAR(kruskal_wallis(mapped).statistic, h, 1e-9);
    EXPECT_GE(h, 0.0);
  }
}

TEST(Pearson, Values) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_NEAR(pearson_r(x, std::vector<double>{2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(pearson_r(x, std::vector<double>{6, 4, 2}), -1.0, 1e-12);
  EXPECT_NEAR(pearson_r(x, std::vector<double>{1, 3, 2}), 0.5, 1e-9);
  EXPECT_THROW(pearson_r(x, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(pearson_r(x, std::vector<double>{1, 1, 1}), Error);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(3 + rng() % 20), neg;
    for (double& a : v) a = u(rng);
    for (double a : v) neg.push_back(-a);
    EXPECT_EQ(pearson_r(v, v), 1.0);
    EXPECT_EQ(pearson_r(v, neg), -1.0);
  }
}

TEST(Likert, Summary) {
  auto rating = [](int q) {
    RatingRecord r;
    r.response_id = "x";
    r.rater_id = "a";
    r.human_likeness = r.content_adherence = r.helpfulness = 3;
    r.quality = q;
    return r;
  };
  const std::vector<RatingRecord> ratings{rating(3), rating(3), rating(2), rating(1)};
  const std::vector<std::string> levels{"A", "A", "A", "B"};
  const auto t = likert_summary(ratings, levels);
  const auto& qa = t.at({"A", RatingMetric::quality});
  EXPECT_NEAR(qa.mean, 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(*qa.sd, std::sqrt(1.0 / 3.0), 1e-12);
  EXPECT_EQ(qa.n, 3u);
  const auto& ha = t.at({"A", RatingMetric::helpfulness});
  EXPECT_EQ(ha.mean, 3.0);
  EXPECT_EQ(*ha.sd, 0.0);
  const auto& qb = t.at({"B", RatingMetric::quality});
  EXPECT_EQ(qb.mean, 1.0);
  EXPECT_FALSE(qb.sd);
  EXPECT_EQ(t.size(), 8u);
}

TEST(Likert, LevelsFromColumnsAndCorpus) {
  RatingRecord a;
  a.response_id = "r1";
  a.rater_id = "alice";
  RatingRecord b = a;
  b.response_id = "r2";
  const std::vector<RatingRecord> ratings{a, b};
  EXPECT_EQ(rating_levels(ratings, "rater_id"), (std::vector<std::string>{"alice", "alice"}));

  Corpus corpus(2);
  corpus[0].id = "r1";
  corpus[0].condition = Condition::sbs;
  corpus[1].id = "r2";
  corpus[1].condition = Condition::hps;
  EXPECT_EQ(rating_levels(ratings, "condition", &corpus), (std::vector<std::string>{"SBS", "HPS"}));
  EXPECT_THROW(rating_levels(ratings, "condition"), Error);

  auto with_col = ratings;
  with_col[0].extra["condition"] = "NPS";
  with_col[1].extra["condition"] = "NPS";
  EXPECT_EQ(rating_levels(with_col, "condition", &corpus), (std::vector<std::string>{"NPS", "NPS"}));

  corpus.pop_back();
  EXPECT_THROW(rating_levels(ratings, "condition", &corpus), Error);

  const auto grouped = group_scores(with_col, std::vector<std::string>{"b", "a"}, RatingMetric::quality);
  ASSERT_EQ(grouped.size(), 2u);
  EXPECT_EQ(grouped[0].first, "a");
}
