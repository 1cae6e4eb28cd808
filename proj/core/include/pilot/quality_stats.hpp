#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pilot/corpus_store.hpp"

namespace pilot {

struct QualityFlags {
  bool persona_repetition = false;
  bool placeholder = false;
  std::vector<std::pair<std::size_t, std::size_t>> matched_spans;  // byte offsets [start, end)

  bool any() const noexcept { return persona_repetition || placeholder; }
};

/// Versioned self-identification patterns, each tried at sentence-initial
/// positions only (start of text, or after . ! ? ; : or a line break, then
/// optional whitespace and an optional opening quote), case-insensitively.
class PatternSet {
 public:
  /// The pattern file bundled with the library.
  static const PatternSet& bundled();
  /// Header lines (`version: N` among them), a `---` line, then one
  /// ECMAScript pattern per line. Throws Error(parse) on a bad file.
  static PatternSet parse(std::string_view text);

  const std::string& version() const noexcept { return version_; }
  std::size_t size() const noexcept { return patterns_.size(); }
  const std::vector<std::string>& sources() const noexcept { return sources_; }

  /// Spans of every sentence-initial match, in text order.
  std::vector<std::pair<std::size_t, std::size_t>> find(std::string_view text) const;

 private:
  std::string version_;
  std::vector<std::string> sources_;
  std::vector<std::regex> patterns_;
};

QualityFlags persona_repetition_flag(std::string_view text, const PatternSet& patterns = PatternSet::bundled());

/// A bracketed span whose contents are at least two characters, hold a
/// letter, and hold an uppercase letter or an internal space, e.g.
/// "[Your Name]".
QualityFlags placeholder_flag(std::string_view text);

enum class QualityFlag { persona_repetition, placeholder };

std::string_view to_string(QualityFlag flag) noexcept;

/// Fraction of records whose flag is set. Throws Error(invalid_input) on an
/// empty group.
double flag_rate(std::span<const ResponseRecord> group, QualityFlag which,
                 const PatternSet& patterns = PatternSet::bundled());

struct TestResult {
  double statistic = 0.0;
  int df_between = 0;            // k - 1
  std::optional<int> df_within;  // N - k; ANOVA only
  std::size_t n_groups = 0;
  std::size_t n_total = 0;

  /// True when the statistic is at least the given critical value.
  bool exceeds(double critical) const noexcept { return statistic >= critical; }
};

/// F = (SSB / (k - 1)) / (SSW / (N - k)). Needs at least 2 groups of at
/// least 2 values; throws Error(degenerate) "zero within-group variance".
TestResult one_way_anova(const std::vector<std::vector<double>>& groups);

/// H with midranks and the tie correction 1 - sum(t^3 - t) / (N^3 - N).
/// Throws Error(degenerate) "all values tied".
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// Sample correlation. Needs equal lengths of at least 3 and non-constant
/// inputs.
double pearson_r(std::span<const double> x, std::span<const double> y);

struct LikertCell {
  double mean = 0.0;
  std::optional<double> sd;  // sample sd (n - 1); absent for n = 1
  std::size_t n = 0;
};

using LikertTable = std::map<std::pair<std::string, RatingMetric>, LikertCell>;

/// Per-level mean and sample sd of every rating metric. `levels[i]` is the
/// factor level of `ratings[i]`.
LikertTable likert_summary(std::span<const RatingRecord> ratings, std::span<const std::string> levels);

/// Factor level of each rating: rater_id or response_id, an extra CSV
/// column present on every row, or else a record field looked up through
/// response_id in `corpus`.
std::vector<std::string> rating_levels(std::span<const RatingRecord> ratings, std::string_view factor,
                                       const Corpus* corpus = nullptr);

/// Ratings split by level (level order) for one metric.
std::vector<std::pair<std::string, std::vector<double>>> group_scores(std::span<const RatingRecord> ratings,
                                                                      std::span<const std::string> levels,
                                                                      RatingMetric metric);

}  // namespace pilot
