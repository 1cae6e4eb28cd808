#include <random>

#include <gtest/gtest.h>

#include "pilot/corpus_store.hpp"
#include "pilot/error.hpp"
#include "support/paths.hpp"

using namespace pilot;

namespace {

ResponseRecord make_record(std::string id, Condition c = Condition::nps, std::string model = "m1") {
  ResponseRecord r;
  r.id = std::move(id);
  r.base_persona = "teacher";
  r.sub_persona = "chem_teacher";
  r.condition = c;
  r.model_id = std::move(model);
  r.content_type = ContentType::email_correspondence;
  r.request_id = "r1";
  r.request_text = "Write an email.";
  r.response_text = "Dear team, \"quoted\" text\nwith a newline and unicode: caf\xC3\xA9 \xE2\x80\x94 done.";
  r.created_at = "2025-03-04T05:06:07Z";
  return r;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kLine =
    R"({"id":"a","base_persona":"b","sub_persona":"s","condition":"SBS","model_id":"m","content_type":"entertainment",)"
    R"("request_id":"r","request_text":"t","response_text":"hello","created_at":"2025-01-01T00:00:00Z"})";

}  // namespace

TEST(Records, FormatParseRoundTrip) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 40; ++i) {
    auto r = make_record("id-" + std::to_string(i), kConditions[i % 3]);
    if (i % 2) r.explanation = "because " + std::to_string(rng());
    if (i % 5 == 0) {
      r.error = "provider failed after 4 attempts: 503";
      r.response_text.clear();
    }
    if (i % 3 == 0) r.config_hash = "00ff";
    if (i % 4 == 0) r.extra["rater_note"] = "keep";
    EXPECT_EQ(parse_record(format_record(r)), r);
  }
}

TEST(Records, FailedRecordsAreMarked) {
  auto r = make_record("x");
  r.error = "boom";
  r.response_text.clear();
  const auto line = format_record(r);
  EXPECT_NE(line.find(R"("status":"failed","error":"boom")"), std::string::npos);
  EXPECT_TRUE(parse_record(line).failed());
}

TEST(Records, ValidationMessages) {
  EXPECT_EQ(error_of([] { parse_record("{oops", 3); }), "line 3: parse failure");
  std::string missing = kLine;
  missing.replace(missing.find(R"("model_id":"m",)"), 15, "");
  EXPECT_EQ(error_of([&] { parse_record(missing, 2); }), "line 2: missing field 'model_id'");
  std::string cond = kLine;
  cond.replace(cond.find("SBS"), 3, "XYZ");
  EXPECT_NE(error_of([&] { parse_record(cond); }).find("unknown condition"), std::string::npos);
  std::string empty = kLine;
  empty.replace(empty.find("hello"), 5, "");
  EXPECT_NE(error_of([&] { parse_record(empty); }).find("empty response_text"), std::string::npos);
  std::string ts = kLine;
  ts.replace(ts.find("2025-01-01T00:00:00Z"), 20, "yesterday");
  EXPECT_NE(error_of([&] { parse_record(ts); }).find("RFC 3339"), std::string::npos);
}

TEST(Records, MissingTimestampIsInferred) {
  std::string line = kLine;
  line.replace(line.find(R"(,"created_at":"2025-01-01T00:00:00Z")"), 36, "");
  const auto r = parse_record(line);
  EXPECT_TRUE(r.created_at_inferred);
  EXPECT_EQ(r.created_at.size(), 20u);
}

TEST(Records, UnknownFieldsPreservedInOrder) {
  std::string line = kLine;
  line.insert(line.size() - 1, R"(,"zeta":1,"alpha":{"k":[1,2]})");
  const auto r = parse_record(line);
  EXPECT_EQ(r.extra.size(), 2u);
  EXPECT_TRUE(format_record(r).ends_with(R"("zeta":1,"alpha":{"k":[1,2]}})"));
}

TEST(Jsonl, WriteReadRoundTripAndDuplicates) {
  const auto dir = testpaths::scratch("jsonl");
  Corpus c;
  for (int i = 0; i < 25; ++i) c.push_back(make_record("r" + std::to_string(i), kConditions[i % 3]));
  write_jsonl(dir / "c.jsonl", c);
  EXPECT_EQ(read_jsonl(dir / "c.jsonl"), c);
  append_jsonl(dir / "c.jsonl", std::span(c).subspan(0, 1));
  EXPECT_EQ(error_of([&] { read_jsonl(dir / "c.jsonl"); }), "line 26: duplicate id 'r0'");
  EXPECT_THROW(read_jsonl(dir / "absent.jsonl"), Error);
  std::filesystem::remove_all(dir);
}

TEST(Jsonl, FixtureCorpusLoads) {
  const auto c = read_jsonl(testpaths::fixtures() / "corpus_90.jsonl");
  EXPECT_EQ(c.size(), 90u);
}

TEST(Grouping, ByConditionAndModel) {
  Corpus c;
  for (int i = 0; i < 12; ++i) {
    c.push_back(make_record("r" + std::to_string(i), kConditions[i % 3], i % 2 ? "m2" : "m1"));
  }
  const auto by_condition = group_by(c, GroupKey::parse("condition"));
  ASSERT_EQ(by_condition.size(), 3u);
  EXPECT_EQ(by_condition.at({"NPS"}).size(), 4u);
  const auto both = group_by(c, GroupKey::parse("condition,model_id"));
  EXPECT_EQ(both.size(), 6u);
  std::size_t total = 0;
  for (const auto& [k, g] : both) total += g.size();
  EXPECT_EQ(total, c.size());
  EXPECT_THROW(GroupKey::parse("condition,condition"), Error);
  EXPECT_THROW(GroupKey::parse("colour"), Error);
  EXPECT_THROW(GroupKey::parse(""), Error);
}

TEST(Filtering, Predicates) {
  Corpus c;
  for (int i = 0; i < 9; ++i) c.push_back(make_record("r" + std::to_string(i), kConditions[i % 3]));
  const std::vector<std::string> clauses{"condition=SBS"};
  EXPECT_EQ(filter(c, FieldPredicate::parse(clauses)).size(), 3u);
  FieldPredicate p;
  p.where("condition", "SBS").where("id", "r1");
  EXPECT_EQ(filter(c, p).size(), 1u);
  EXPECT_EQ(error_of([] { FieldPredicate().where("colour", "x"); }), "unknown field 'colour'");
}

TEST(Ratings, ParseQuotedCsvAndExtraColumns) {
  const std::string csv =
      "response_id,rater_id,human_likeness,content_adherence,quality,helpfulness,feedback,condition\r\n"
      "a,r1,3,2,1,3,\"Nice, but \"\"stiff\"\"\nsecond line\",SBS\r\n"
      "b,r2,1,1,1,1,,NPS\n";
  const auto rows = parse_ratings_csv(csv);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].feedback, "Nice, but \"stiff\"\nsecond line");
  EXPECT_EQ(rows[0].extra.at("condition"), "SBS");
  EXPECT_EQ(rows[0].score(RatingMetric::quality), 1);
  EXPECT_FALSE(rows[1].feedback);
  EXPECT_EQ(parse_ratings_csv(format_ratings_csv(rows)), rows);
}

TEST(Ratings, RejectsBadScoresAndColumns) {
  EXPECT_THROW(parse_ratings_csv("response_id,rater_id,human_likeness,content_adherence,quality,helpfulness,feedback\n"
                                 "a,r,4,1,1,1,\n"),
               Error);
  EXPECT_THROW(parse_ratings_csv("response_id,rater_id,quality\na,r,1\n"), Error);
  EXPECT_THROW(parse_ratings_csv("response_id,rater_id,human_likeness,content_adherence,quality,helpfulness,feedback\n"
                                 "a,r,1,1,1,1,\"open\n"),
               Error);
}
