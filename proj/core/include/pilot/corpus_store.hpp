#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pilot/prompt_engine.hpp"

namespace pilot {

/// One generated response with its experimental coordinates.
///
/// A record whose `error` is set is a failed matrix cell: it keeps its
/// coordinates so the corpus accounts for every cell, and its
/// response_text may be empty. Every other record has a non-empty
/// response_text.
struct ResponseRecord {
  std::string id;
  std::string base_persona;
  std::string sub_persona;
  Condition condition = Condition::nps;
  std::string model_id;
  ContentType content_type = ContentType::personal_writing;
  std::string request_id;
  std::string request_text;
  std::string response_text;
  std::optional<std::string> explanation;
  std::string created_at;            // RFC 3339
  bool created_at_inferred = false;  // filled at ingestion because the line had none
  std::optional<std::string> error;
  std::optional<std::string> config_hash;  // hash of the run config that generated the record
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // unknown fields, re-emitted verbatim

  bool failed() const noexcept { return error.has_value(); }
  bool operator==(const ResponseRecord&) const = default;
};

using Corpus = std::vector<ResponseRecord>;

/// Parses one JSONL line. `line_no` only decorates error messages.
ResponseRecord parse_record(std::string_view line, std::size_t line_no = 1);
/// Serializes one record as a single JSON line (no newline). Known fields
/// come first in a fixed order, then extras in their original order.
std::string format_record(const ResponseRecord& record);

/// Reads a corpus; blank lines are skipped, errors name the 1-based line.
Corpus read_jsonl(const std::filesystem::path& path);
Corpus parse_jsonl(std::string_view text);
void write_jsonl(const std::filesystem::path& path, std::span<const ResponseRecord> corpus);
void append_jsonl(const std::filesystem::path& path, std::span<const ResponseRecord> records);

/// Current UTC time as RFC 3339 with second precision.
std::string now_rfc3339();

enum class GroupField { condition, model_id, content_type, base_persona };

std::string_view to_string(GroupField field) noexcept;
std::optional<GroupField> parse_group_field(std::string_view text) noexcept;

class GroupKey {
 public:
  /// Non-empty, no repeated field.
  explicit GroupKey(std::vector<GroupField> fields);
  /// Comma-separated, e.g. "condition,model_id".
  static GroupKey parse(std::string_view spec);

  const std::vector<GroupField>& fields() const noexcept { return fields_; }
  std::vector<std::string> values_of(const ResponseRecord& record) const;

 private:
  std::vector<GroupField> fields_;
};

using GroupMap = std::map<std::vector<std::string>, Corpus>;

/// Partitions the corpus by the key's field values; record order within a
/// group follows the corpus.
GroupMap group_by(std::span<const ResponseRecord> corpus, const GroupKey& key);

/// Conjunction of field == value clauses over the record's string fields
/// (id, base_persona, sub_persona, condition, model_id, content_type,
/// request_id).
class FieldPredicate {
 public:
  FieldPredicate() = default;
  /// Throws Error(invalid_input) for an unknown field name.
  FieldPredicate& where(std::string field, std::string value);
  /// "condition=SBS" (repeat for more clauses).
  static FieldPredicate parse(std::span<const std::string> clauses);

  bool operator()(const ResponseRecord& record) const;

 private:
  std::vector<std::pair<std::string, std::string>> clauses_;
};

/// Field value by wire name; throws Error(invalid_input) "unknown field".
std::string field_value(const ResponseRecord& record, std::string_view field);

Corpus filter(std::span<const ResponseRecord> corpus, const FieldPredicate& predicate);

enum class RatingMetric { human_likeness, content_adherence, quality, helpfulness };

inline constexpr std::array<RatingMetric, 4> kRatingMetrics = {
    RatingMetric::human_likeness, RatingMetric::content_adherence, RatingMetric::quality,
    RatingMetric::helpfulness};

std::string_view to_string(RatingMetric metric) noexcept;
std::optional<RatingMetric> parse_rating_metric(std::string_view text) noexcept;

/// One rater's 3-point Likert scores (1 = low, 3 = high) for a response.
struct RatingRecord {
  std::string response_id;
  std::string rater_id;
  int human_likeness = 0;
  int content_adherence = 0;
  int quality = 0;
  int helpfulness = 0;
  std::optional<std::string> feedback;
  std::map<std::string, std::string> extra;  // additional CSV columns, e.g. condition

  int score(RatingMetric metric) const noexcept;
  bool operator==(const RatingRecord&) const = default;
};

/// Header-bearing CSV (RFC 4180 quoting). Required columns: response_id,
/// rater_id, human_likeness, content_adherence, quality, helpfulness,
/// feedback; other columns land in `extra`.
std::vector<RatingRecord> parse_ratings_csv(std::string_view text);
std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path);
std::string format_ratings_csv(std::span<const RatingRecord> ratings);

}  // namespace pilot
