#include "pilot/quality_stats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "pilot/diversity_metrics.hpp"
#include "pilot/error.hpp"
#include "pilot/resources.hpp"
#include "text_util.hpp"

namespace pilot {
namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorKind::invalid_input, message); }
[[noreturn]] void degenerate(const std::string& message) { throw Error(ErrorKind::degenerate, message); }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

// Length of an opening quote at `pos`, or 0.
std::size_t opening_quote(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) return 0;
  const char c = text[pos];
  if (c == '"' || c == '\'' || c == '(') return 1;
  // U+201C and U+2018 left quotation marks.
  if (text.substr(pos, 3) == "\xE2\x80\x9C" || text.substr(pos, 3) == "\xE2\x80\x98") return 3;
  return 0;
}

std::vector<std::size_t> sentence_starts(std::string_view text) {
  std::vector<std::size_t> boundaries{0};
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == ':' || c == '\n') boundaries.push_back(i + 1);
  }
  std::vector<std::size_t> starts;
  for (std::size_t b : boundaries) {
    std::size_t p = b;
    while (p < text.size() && is_space(text[p])) ++p;
    p += opening_quote(text, p);
    if (p < text.size() && (starts.empty() || starts.back() != p)) starts.push_back(p);
  }
  return starts;
}

}  // namespace

const PatternSet& PatternSet::bundled() {
  static const PatternSet set = [] {
    std::string text(resources::header("self_identification_patterns.txt"));
    text += "---\n";
    text += resources::body("self_identification_patterns.txt");
    return parse(text);
  }();
  return set;
}

PatternSet PatternSet::parse(std::string_view text) {
  PatternSet set;
  bool in_body = false;
  for (auto raw : detail::split_lines(text)) {
    const auto line = detail::trim(raw);
    if (!in_body) {
      if (line == "---") {
        in_body = true;
      } else if (line.starts_with("version:")) {
        set.version_ = std::string(detail::trim(line.substr(8)));
      }
      continue;
    }
    if (line.empty()) continue;
    try {
      set.patterns_.emplace_back(std::string(line), std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
      throw Error(ErrorKind::parse, "bad pattern '" + std::string(line) + "': " + e.what());
    }
    set.sources_.emplace_back(line);
  }
  if (!in_body) throw Error(ErrorKind::parse, "pattern file: missing '---' separator");
  if (set.version_.empty()) throw Error(ErrorKind::parse, "pattern file: missing version header");
  if (set.patterns_.empty()) throw Error(ErrorKind::parse, "pattern file: no patterns");
  return set;
}

std::vector<std::pair<std::size_t, std::size_t>> PatternSet::find(std::string_view text) const {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t start : sentence_starts(text)) {
    const char* first = text.data() + start;
    const char* last = text.data() + text.size();
    std::size_t best = 0;
    for (const auto& re : patterns_) {
      std::cmatch m;
      if (std::regex_search(first, last, m, re, std::regex_constants::match_continuous)) {
        best = std::max(best, static_cast<std::size_t>(m.length(0)));
      }
    }
    if (best > 0) spans.emplace_back(start, start + best);
  }
  return spans;
}

QualityFlags persona_repetition_flag(std::string_view text, const PatternSet& patterns) {
  QualityFlags flags;
  flags.matched_spans = patterns.find(text);
  flags.persona_repetition = !flags.matched_spans.empty();
  return flags;
}

QualityFlags placeholder_flag(std::string_view text) {
  QualityFlags flags;
  std::size_t open = std::string_view::npos;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '[') {
      open = i;
    } else if (c == '\n') {
      open = std::string_view::npos;
    } else if (c == ']' && open != std::string_view::npos) {
      const auto inner = text.substr(open + 1, i - open - 1);
      bool letter = false, upper = false, inner_space = false;
      for (std::size_t j = 0; j < inner.size(); ++j) {
        const auto u = static_cast<unsigned char>(inner[j]);
        if (std::isalpha(u)) letter = true;
        if (std::isupper(u)) upper = true;
        if (inner[j] == ' ' && j > 0 && j + 1 < inner.size()) inner_space = true;
      }
      if (length_chars(inner) >= 2 && letter && (upper || inner_space)) {
        flags.matched_spans.emplace_back(open, i + 1);
      }
      open = std::string_view::npos;
    }
  }
  flags.placeholder = !flags.matched_spans.empty();
  return flags;
}

std::string_view to_string(QualityFlag flag) noexcept {
  return flag == QualityFlag::persona_repetition ? "persona_repetition" : "placeholder";
}

double flag_rate(std::span<const ResponseRecord> group, QualityFlag which, const PatternSet& patterns) {
  if (group.empty()) fail("flag_rate: empty group");
  std::size_t hits = 0;
  for (const auto& r : group) {
    if (r.response_text.empty()) continue;
    const bool hit = which == QualityFlag::persona_repetition
                         ? persona_repetition_flag(r.response_text, patterns).persona_repetition
                         : placeholder_flag(r.response_text).placeholder;
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(group.size());
}

TestResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) fail("anova: need at least 2 groups");
  std::size_t n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) fail("anova: every group needs at least 2 values");
    for (double v : g) {
      if (!std::isfinite(v)) fail("anova: non-finite value");
      grand += v;
    }
    n += g.size();
  }
  grand /= static_cast<double>(n);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }
  if (ssw == 0.0) degenerate("zero within-group variance");

  TestResult r;
  r.n_groups = groups.size();
  r.n_total = n;
  r.df_between = static_cast<int>(groups.size()) - 1;
  r.df_within = static_cast<int>(n - groups.size());
  r.statistic = (ssb / r.df_between) / (ssw / *r.df_within);
  return r;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) fail("kruskal-wallis: need at least 2 groups");
  std::vector<std::pair<double, std::size_t>> pooled;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) fail("kruskal-wallis: empty group");
    for (double v : groups[g]) {
      if (!std::isfinite(v)) fail("kruskal-wallis: non-finite value");
      pooled.emplace_back(v, g);
    }
  }
  std::sort(pooled.begin(), pooled.end());
  const double n = static_cast<double>(pooled.size());

  std::vector<double> rank_sums(groups.size(), 0.0);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t p = i; p < j; ++p) rank_sums[pooled[p].second] += midrank;
    tie_term += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0.0) degenerate("all values tied");

  double s = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) s += rank_sums[g] * rank_sums[g] / static_cast<double>(groups[g].size());
  const double h = (12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0)) / correction;

  TestResult r;
  r.statistic = std::max(0.0, h);
  r.df_between = static_cast<int>(groups.size()) - 1;
  r.n_groups = groups.size();
  r.n_total = pooled.size();
  return r;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail("pearson: length mismatch");
  if (x.size() < 3) fail("pearson: need at least 3 pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) degenerate("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

LikertTable likert_summary(std::span<const RatingRecord> ratings, std::span<const std::string> levels) {
  if (ratings.empty()) fail("likert summary: no ratings");
  if (levels.size() != ratings.size()) fail("likert summary: level count mismatch");
  LikertTable table;
  for (RatingMetric metric : kRatingMetrics) {
    for (const auto& [level, values] : group_scores(ratings, levels, metric)) {
      LikertCell cell;
      cell.n = values.size();
      cell.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(cell.n);
      if (cell.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
        cell.sd = std::sqrt(ss / static_cast<double>(cell.n - 1));
      }
      table.emplace(std::pair{level, metric}, cell);
    }
  }
  return table;
}

std::vector<std::string> rating_levels(std::span<const RatingRecord> ratings, std::string_view factor,
                                       const Corpus* corpus) {
  std::vector<std::string> levels;
  levels.reserve(ratings.size());
  if (factor == "rater_id" || factor == "response_id") {
    for (const auto& r : ratings) levels.push_back(factor == "rater_id" ? r.rater_id : r.response_id);
    return levels;
  }
  const std::string key(factor);
  const bool in_csv = !ratings.empty() && std::all_of(ratings.begin(), ratings.end(), [&](const RatingRecord& r) {
    return r.extra.contains(key);
  });
  if (in_csv) {
    for (const auto& r : ratings) levels.push_back(r.extra.at(key));
    return levels;
  }
  if (corpus == nullptr) fail("unknown factor '" + key + "': not a ratings column and no corpus to join");
  std::map<std::string_view, const ResponseRecord*> by_id;
  for (const auto& rec : *corpus) by_id.emplace(rec.id, &rec);
  for (const auto& r : ratings) {
    auto it = by_id.find(r.response_id);
    if (it == by_id.end()) fail("rating for unknown response '" + r.response_id + "'");
    levels.push_back(field_value(*it->second, factor));
  }
  return levels;
}

std::vector<std::pair<std::string, std::vector<double>>> group_scores(std::span<const RatingRecord> ratings,
                                                                      std::span<const std::string> levels,
                                                                      RatingMetric metric) {
  if (levels.size() != ratings.size()) fail("level count mismatch");
  std::map<std::string, std::vector<double>> grouped;
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    grouped[levels[i]].push_back(static_cast<double>(ratings[i].score(metric)));
  }
  return {grouped.begin(), grouped.end()};
}

}  // namespace pilot
