#include "pilot/corpus_store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <regex>
#include <set>

#include "pilot/error.hpp"
#include "text_util.hpp"

namespace pilot {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 15> kKnownFields = {
    "id",           "base_persona",  "sub_persona", "condition",  "model_id",
    "content_type", "request_id",    "request_text", "response_text", "explanation",
    "created_at",   "created_at_inferred", "error", "config_hash", "status"};

constexpr std::array<std::string_view, 7> kFilterFields = {
    "id", "base_persona", "sub_persona", "condition", "model_id", "content_type", "request_id"};

[[noreturn]] void fail_line(std::size_t line, ErrorKind kind, const std::string& what) {
  throw Error(kind, "line " + std::to_string(line) + ": " + what);
}

std::string required(const ordered_json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_line(line, ErrorKind::validation, std::string("missing field '") + key + "'");
  if (!it->is_string()) fail_line(line, ErrorKind::validation, std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const ordered_json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail_line(line, ErrorKind::validation, std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

bool is_rfc3339(const std::string& s) {
  static const std::regex re(R"(^\d{4}-\d{2}-\d{2}[Tt]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$)");
  return std::regex_match(s, re);
}

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
// line breaks.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      // CRLF: the '\n' ends the row
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorKind::parse, "ratings CSV: unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

ResponseRecord parse_record(std::string_view line, std::size_t line_no) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line);
  } catch (const ordered_json::parse_error&) {
    fail_line(line_no, ErrorKind::parse, "parse failure");
  }
  if (!obj.is_object()) fail_line(line_no, ErrorKind::parse, "parse failure");

  ResponseRecord r;
  r.id = required(obj, "id", line_no);
  if (r.id.empty()) fail_line(line_no, ErrorKind::validation, "empty id");
  r.base_persona = required(obj, "base_persona", line_no);
  r.sub_persona = required(obj, "sub_persona", line_no);
  const std::string condition = required(obj, "condition", line_no);
  if (auto c = parse_condition(condition)) {
    r.condition = *c;
  } else {
    fail_line(line_no, ErrorKind::validation, "unknown condition '" + condition + "'");
  }
  r.model_id = required(obj, "model_id", line_no);
  const std::string content_type = required(obj, "content_type", line_no);
  if (auto t = parse_content_type(content_type)) {
    r.content_type = *t;
  } else {
    fail_line(line_no, ErrorKind::validation, "unknown content_type '" + content_type + "'");
  }
  r.request_id = required(obj, "request_id", line_no);
  r.request_text = required(obj, "request_text", line_no);
  r.response_text = optional_string(obj, "response_text", line_no).value_or("");
  r.explanation = optional_string(obj, "explanation", line_no);
  r.error = optional_string(obj, "error", line_no);
  r.config_hash = optional_string(obj, "config_hash", line_no);
  if (!r.failed() && r.response_text.empty()) fail_line(line_no, ErrorKind::validation, "empty response_text");

  if (auto ts = optional_string(obj, "created_at", line_no)) {
    if (!is_rfc3339(*ts)) fail_line(line_no, ErrorKind::validation, "created_at is not RFC 3339: " + *ts);
    r.created_at = *ts;
    if (auto it = obj.find("created_at_inferred"); it != obj.end()) {
      if (!it->is_boolean()) fail_line(line_no, ErrorKind::validation, "created_at_inferred is not a boolean");
      r.created_at_inferred = it->get<bool>();
    }
  } else {
    r.created_at = now_rfc3339();
    r.created_at_inferred = true;
  }

  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(kKnownFields.begin(), kKnownFields.end(), it.key()) == kKnownFields.end()) {
      r.extra[it.key()] = it.value();
    }
  }
  return r;
}

std::string format_record(const ResponseRecord& r) {
  ordered_json obj;
  obj["id"] = r.id;
  obj["base_persona"] = r.base_persona;
  obj["sub_persona"] = r.sub_persona;
  obj["condition"] = to_string(r.condition);
  obj["model_id"] = r.model_id;
  obj["content_type"] = to_string(r.content_type);
  obj["request_id"] = r.request_id;
  obj["request_text"] = r.request_text;
  obj["response_text"] = r.response_text;
  if (r.explanation) obj["explanation"] = *r.explanation;
  obj["created_at"] = r.created_at;
  if (r.created_at_inferred) obj["created_at_inferred"] = true;
  if (r.error) {
    obj["status"] = "failed";
    obj["error"] = *r.error;
  }
  if (r.config_hash) obj["config_hash"] = *r.config_hash;
  for (auto it = r.extra.begin(); it != r.extra.end(); ++it) obj[it.key()] = it.value();
  return obj.dump(-1, ' ', false, ordered_json::error_handler_t::strict);
}

Corpus parse_jsonl(std::string_view text) {
  Corpus corpus;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (auto line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ResponseRecord r = parse_record(line, line_no);
    if (!ids.insert(r.id).second) fail_line(line_no, ErrorKind::validation, "duplicate id '" + r.id + "'");
    corpus.push_back(std::move(r));
  }
  return corpus;
}

Corpus read_jsonl(const std::filesystem::path& path) { return parse_jsonl(detail::read_file(path)); }

void write_jsonl(const std::filesystem::path& path, std::span<const ResponseRecord> corpus) {
  std::string out;
  for (const auto& r : corpus) {
    out += format_record(r);
    out += '\n';
  }
  detail::write_file_atomic(path, out);
}

void append_jsonl(const std::filesystem::path& path, std::span<const ResponseRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::io, "cannot append to " + path.string());
  for (const auto& r : records) out << format_record(r) << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::io, "write failure: " + path.string());
}

std::string now_rfc3339() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string_view to_string(GroupField field) noexcept {
  switch (field) {
    case GroupField::condition: return "condition";
    case GroupField::model_id: return "model_id";
    case GroupField::content_type: return "content_type";
    case GroupField::base_persona: return "base_persona";
  }
  return "condition";
}

std::optional<GroupField> parse_group_field(std::string_view text) noexcept {
  for (auto f : {GroupField::condition, GroupField::model_id, GroupField::content_type, GroupField::base_persona}) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

GroupKey::GroupKey(std::vector<GroupField> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw Error(ErrorKind::invalid_input, "group key: no fields");
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (fields_[i] == fields_[j]) {
        throw Error(ErrorKind::invalid_input, "group key: duplicate field '" + std::string(to_string(fields_[i])) + "'");
      }
    }
  }
}

GroupKey GroupKey::parse(std::string_view spec) {
  std::vector<GroupField> fields;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    const auto name = detail::trim(spec.substr(pos, comma - pos));
    auto f = parse_group_field(name);
    if (!f) throw Error(ErrorKind::invalid_input, "group key: unknown field '" + std::string(name) + "'");
    fields.push_back(*f);
    pos = comma + 1;
  }
  return GroupKey(std::move(fields));
}

std::vector<std::string> GroupKey::values_of(const ResponseRecord& record) const {
  std::vector<std::string> out;
  out.reserve(fields_.size());
  for (auto f : fields_) out.push_back(field_value(record, to_string(f)));
  return out;
}

GroupMap group_by(std::span<const ResponseRecord> corpus, const GroupKey& key) {
  GroupMap groups;
  for (const auto& r : corpus) groups[key.values_of(r)].push_back(r);
  return groups;
}

std::string field_value(const ResponseRecord& r, std::string_view field) {
  if (field == "id") return r.id;
  if (field == "base_persona") return r.base_persona;
  if (field == "sub_persona") return r.sub_persona;
  if (field == "condition") return std::string(to_string(r.condition));
  if (field == "model_id") return r.model_id;
  if (field == "content_type") return std::string(to_string(r.content_type));
  if (field == "request_id") return r.request_id;
  throw Error(ErrorKind::invalid_input, "unknown field '" + std::string(field) + "'");
}

FieldPredicate& FieldPredicate::where(std::string field, std::string value) {
  if (std::find(kFilterFields.begin(), kFilterFields.end(), field) == kFilterFields.end()) {
    throw Error(ErrorKind::invalid_input, "unknown field '" + field + "'");
  }
  clauses_.emplace_back(std::move(field), std::move(value));
  return *this;
}

FieldPredicate FieldPredicate::parse(std::span<const std::string> clauses) {
  FieldPredicate p;
  for (const auto& clause : clauses) {
    const auto eq = clause.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::invalid_input, "filter clause needs field=value: " + clause);
    p.where(std::string(detail::trim(std::string_view(clause).substr(0, eq))), clause.substr(eq + 1));
  }
  return p;
}

bool FieldPredicate::operator()(const ResponseRecord& record) const {
  return std::all_of(clauses_.begin(), clauses_.end(),
                     [&](const auto& c) { return field_value(record, c.first) == c.second; });
}

Corpus filter(std::span<const ResponseRecord> corpus, const FieldPredicate& predicate) {
  Corpus out;
  std::copy_if(corpus.begin(), corpus.end(), std::back_inserter(out), std::cref(predicate));
  return out;
}

std::string_view to_string(RatingMetric metric) noexcept {
  switch (metric) {
    case RatingMetric::human_likeness: return "human_likeness";
    case RatingMetric::content_adherence: return "content_adherence";
    case RatingMetric::quality: return "quality";
    case RatingMetric::helpfulness: return "helpfulness";
  }
  return "quality";
}

std::optional<RatingMetric> parse_rating_metric(std::string_view text) noexcept {
  for (auto m : kRatingMetrics) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

int RatingRecord::score(RatingMetric metric) const noexcept {
  switch (metric) {
    case RatingMetric::human_likeness: return human_likeness;
    case RatingMetric::content_adherence: return content_adherence;
    case RatingMetric::quality: return quality;
    case RatingMetric::helpfulness: return helpfulness;
  }
  return 0;
}

std::vector<RatingRecord> parse_ratings_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorKind::parse, "ratings CSV: missing header");
  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (detail::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  constexpr std::array<std::string_view, 7> required_cols = {
      "response_id", "rater_id", "human_likeness", "content_adherence", "quality", "helpfulness", "feedback"};
  std::array<std::size_t, 7> idx{};
  for (std::size_t i = 0; i < required_cols.size(); ++i) {
    auto c = column(required_cols[i]);
    if (!c) throw Error(ErrorKind::validation, "ratings CSV: missing column '" + std::string(required_cols[i]) + "'");
    idx[i] = *c;
  }

  std::vector<RatingRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "ratings CSV row " + std::to_string(r + 1);
    if (row.size() != header.size()) {
      throw Error(ErrorKind::parse, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(row.size()));
    }
    auto likert = [&](std::size_t col) {
      const auto cell = detail::trim(row[col]);
      if (cell != "1" && cell != "2" && cell != "3") {
        throw Error(ErrorKind::validation,
                    where + ": " + header[col] + " must be 1, 2 or 3 (got '" + std::string(cell) + "')");
      }
      return cell[0] - '0';
    };
    RatingRecord rec;
    rec.response_id = std::string(detail::trim(row[idx[0]]));
    rec.rater_id = std::string(detail::trim(row[idx[1]]));
    if (rec.response_id.empty()) throw Error(ErrorKind::validation, where + ": empty response_id");
    rec.human_likeness = likert(idx[2]);
    rec.content_adherence = likert(idx[3]);
    rec.quality = likert(idx[4]);
    rec.helpfulness = likert(idx[5]);
    if (!row[idx[6]].empty()) rec.feedback = row[idx[6]];
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (std::find(idx.begin(), idx.end(), c) == idx.end()) rec.extra[std::string(detail::trim(header[c]))] = row[c];
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RatingRecord> read_ratings_csv(const std::filesystem::path& path) {
  return parse_ratings_csv(detail::read_file(path));
}

std::string format_ratings_csv(std::span<const RatingRecord> ratings) {
  std::set<std::string> extra_cols;
  for (const auto& r : ratings) {
    for (const auto& [k, v] : r.extra) extra_cols.insert(k);
  }
  std::string out = "response_id,rater_id,human_likeness,content_adherence,quality,helpfulness,feedback";
  for (const auto& c : extra_cols) out += "," + csv_escape(c);
  out += "\n";
  for (const auto& r : ratings) {
    out += csv_escape(r.response_id) + "," + csv_escape(r.rater_id) + "," + std::to_string(r.human_likeness) +
           "," + std::to_string(r.content_adherence) + "," + std::to_string(r.quality) + "," +
           std::to_string(r.helpfulness) + "," + csv_escape(r.feedback.value_or(""));
    for (const auto& c : extra_cols) {
      auto it = r.extra.find(c);
      out += "," + csv_escape(it == r.extra.end() ? "" : it->second);
    }
    out += "\n";
  }
  return out;
}

}  // namespace pilot
