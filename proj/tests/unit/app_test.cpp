#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "pilot/app.hpp"
#include "pilot/corpus_store.hpp"
#include "pilot/error.hpp"
#include "pilot/schema_profile.hpp"
#include "support/paths.hpp"

using namespace pilot;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct Captured {
  std::ostringstream out, err;
  Streams io() { return {out, err}; }
};

// 2 personas x 2 conditions x 3 requests x 1 model = 12 cells.
fs::path small_run(const fs::path& dir, const std::string& provider = "provider_stub.json") {
  fs::copy_file(testpaths::fixtures() / "chem_teacher_profile.json", dir / "profile.json");
  fs::copy_file(testpaths::fixtures() / "provider_stub.json", dir / "provider_stub.json");
  spit(dir / "provider_down.json",
       R"({"kind":"http","endpoint":"http://127.0.0.1:1","timeout_s":1,"retry":{"max_retries":1,"backoff_ms":0}})");
  spit(dir / "personas.jsonl",
       "{\"id\":\"chem\",\"description\":\"chemistry teacher\",\"base_persona\":\"teacher\",\"profile\":\"profile.json\"}\n"
       "{\"id\":\"nurse\",\"description\":\"night shift nurse\",\"base_persona\":\"nurse\",\"profile\":\"profile.json\"}\n");
  std::string requests;
  const std::string all = slurp(testpaths::fixtures() / "requests.jsonl");
  std::istringstream lines(all);
  std::string line;
  for (int i = 0; i < 3 && std::getline(lines, line); ++i) requests += line + "\n";
  spit(dir / "requests.jsonl", requests);
  spit(dir / "run.json", R"({"provider_config":")" + provider +
                             R"(","personas":"personas.jsonl","requests":"requests.jsonl",)"
                             R"("conditions":["NPS","SBS"],"models":["stub-a"],"seed":11,)"
                             R"("corpus":"out/corpus.jsonl","report":"out/report.json"})");
  return dir / "run.json";
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) n += !l.empty();
  return n;
}

}  // namespace

TEST(CellId, Format) {
  EXPECT_EQ(cell_id("chem", Condition::sbs, "r01", "stub-a"), "chem:SBS:r01:stub-a");
}

TEST(RunConfigFile, KeysAndHash) {
  const auto cfg = RunConfig::load(testpaths::fixtures() / "run_config.json");
  EXPECT_EQ(cfg.models.size(), 3u);
  EXPECT_EQ(*cfg.seed, 7u);
  EXPECT_EQ(cfg.hash(7), RunConfig::load(testpaths::fixtures() / "run_config.json").hash(7));
  EXPECT_NE(cfg.hash(7), cfg.hash(8));
  EXPECT_THROW(RunConfig::parse(R"({"seeds": 3})"), Error);
  EXPECT_THROW(RunConfig::parse(R"({"conditions": ["XYZ"]})"), Error);
}

TEST(ProfileCommands, AverageValidateVariation) {
  const auto dir = testpaths::scratch("profile");
  write_profile_file(dir / "a.json", PilotProfile::uniform("p", 40));
  write_profile_file(dir / "b.json", PilotProfile::uniform("p", 60));
  Captured c;
  ASSERT_EQ(cmd_profile_average({{dir / "a.json", dir / "b.json"}, std::nullopt, dir / "avg.json"}, c.io()), 0);
  const auto avg = read_profile_file(dir / "avg.json");
  for (double v : avg.values()) EXPECT_EQ(v, 50.0);
  EXPECT_EQ(avg.source(), ProfileSource::averaged);

  std::string bad = slurp(dir / "a.json");
  const auto at = bad.find(": 40");
  ASSERT_NE(at, std::string::npos);
  bad.replace(at, 4, ": 120");
  spit(dir / "bad.json", bad);
  Captured v;
  EXPECT_EQ(cmd_profile_validate({{dir / "a.json", dir / "bad.json"}, std::nullopt}, v.io()), 1);
  EXPECT_NE(v.out.str().find("ok " + (dir / "a.json").string()), std::string::npos);
  EXPECT_NE(v.err.str().find("bad.json"), std::string::npos);
  EXPECT_NE(v.err.str().find("120"), std::string::npos);

  Captured var;
  EXPECT_EQ(cmd_profile_variation({{dir / "a.json", dir / "b.json"}, std::nullopt}, var.io()), 1);
  EXPECT_NE(var.out.str().find("8 violation(s)"), std::string::npos);
  Captured same;
  EXPECT_EQ(cmd_profile_variation({{dir / "a.json", dir / "a.json"}, std::nullopt}, same.io()), 0);
  Captured usage;
  EXPECT_EQ(cmd_profile_average({}, usage.io()), 2);
  fs::remove_all(dir);
}

TEST(ProfileCommands, ElicitIsDeterministic) {
  const auto dir = testpaths::scratch("elicit");
  ElicitOptions o;
  o.provider = testpaths::fixtures() / "provider_stub.json";
  o.texts = {testpaths::fixtures() / "persona_sample.txt"};
  o.persona_id = "chem_teacher";
  o.model = "stub-a";
  o.seed = 7;
  Captured a, b;
  ASSERT_EQ(cmd_profile_elicit(o, a.io()), 0) << a.err.str();
  ASSERT_EQ(cmd_profile_elicit(o, b.io()), 0);
  EXPECT_EQ(a.out.str(), b.out.str());
  EXPECT_EQ(a.out.str(), slurp(testpaths::fixtures() / "chem_teacher_profile.json"));
  o.texts.clear();
  Captured u;
  EXPECT_EQ(cmd_profile_elicit(o, u.io()), 2);
  fs::remove_all(dir);
}

TEST(Generate, MatrixDeterminismAndResume) {
  const auto dir = testpaths::scratch("gen");
  const auto run = small_run(dir);
  const auto corpus = dir / "out" / "corpus.jsonl";
  Captured c;
  ASSERT_EQ(cmd_generate({run, std::nullopt, std::nullopt, std::nullopt, 0}, c.io()), 0) << c.err.str();
  ASSERT_EQ(line_count(corpus), 12u);
  const std::string first = slurp(corpus);
  const auto records = read_jsonl(corpus);
  for (const auto& r : records) {
    EXPECT_FALSE(r.failed());
    EXPECT_FALSE(r.response_text.empty());
    EXPECT_EQ(r.id, cell_id(r.sub_persona, r.condition, r.request_id, r.model_id));
    EXPECT_TRUE(r.config_hash);
  }

  fs::remove(corpus);
  Captured again;
  ASSERT_EQ(cmd_generate({run, std::nullopt, std::nullopt, std::nullopt, 5}, again.io()), 0);
  EXPECT_EQ(slurp(corpus), first);

  // Drop the last six records and resume.
  std::istringstream lines(first);
  std::string head, line;
  for (int i = 0; i < 6 && std::getline(lines, line); ++i) head += line + "\n";
  spit(corpus, head);
  Captured resume;
  ASSERT_EQ(cmd_generate({run, std::nullopt, std::nullopt, std::nullopt, 0}, resume.io()), 0);
  EXPECT_NE(resume.out.str().find("6 generated, 6 already present"), std::string::npos) << resume.out.str();
  EXPECT_EQ(slurp(corpus), first);

  // A different seed gives different text.
  Captured other;
  ASSERT_EQ(cmd_generate({run, std::nullopt, 12, dir / "other.jsonl", 0}, other.io()), 0);
  EXPECT_NE(slurp(dir / "other.jsonl"), first);
  fs::remove_all(dir);
}

TEST(Generate, UnreachableProviderKeepsPartialCorpus) {
  const auto dir = testpaths::scratch("down");
  const auto run = small_run(dir, "provider_down.json");
  const auto corpus = dir / "out" / "corpus.jsonl";
  Captured c;
  EXPECT_EQ(cmd_generate({run, std::nullopt, std::nullopt, std::nullopt, 0}, c.io()), 1);
  const auto failed = read_jsonl(corpus);
  ASSERT_EQ(failed.size(), 12u);
  for (const auto& r : failed) {
    ASSERT_TRUE(r.error);
    EXPECT_NE(r.error->find("after 2 attempts"), std::string::npos) << *r.error;
  }
  // Resuming with a working provider fills every failed cell.
  Captured fix;
  ASSERT_EQ(cmd_generate({run, dir / "provider_stub.json", std::nullopt, std::nullopt, 0}, fix.io()), 0)
      << fix.err.str();
  const auto repaired = read_jsonl(corpus);
  ASSERT_EQ(repaired.size(), 12u);
  for (const auto& r : repaired) EXPECT_FALSE(r.failed());
  fs::remove_all(dir);
}

TEST(Generate, NeedsConfig) {
  Captured c;
  EXPECT_EQ(cmd_generate({}, c.io()), 2);
}

TEST(Evaluate, FixtureReportIsDeterministic) {
  EvaluateOptions o;
  o.corpus = testpaths::fixtures() / "corpus_90.jsonl";
  o.group_by = "condition";
  o.seed = 7;
  Captured a, b;
  ASSERT_EQ(cmd_evaluate(o, a.io()), 0) << a.err.str();
  o.threads = 1;
  ASSERT_EQ(cmd_evaluate(o, b.io()), 0);
  EXPECT_EQ(a.out.str(), b.out.str());
  const auto report = nlohmann::json::parse(a.out.str());
  ASSERT_EQ(report["groups"].size(), 3u);
  EXPECT_EQ(report["metadata"]["n_records"], 90);
  EXPECT_EQ(report["metadata"]["detector_pattern_version"], "1");
  for (const auto& g : report["groups"]) {
    EXPECT_EQ(g["n_records"], 30);
    EXPECT_FALSE(g["steerability"]["degenerate"].get<bool>());
    const double q = g["quality"]["persona_repetition_rate"];
    EXPECT_GE(q, 0.0);
    EXPECT_LE(q, 1.0);
    EXPECT_EQ(g["diversity"]["ngram_1_diversity"].get<double>() + g["diversity"]["ngram_1_repetition"].get<double>(),
              1.0);
  }
  EXPECT_EQ(cmd_evaluate({}, a.io()), 2);  // no seed
}

TEST(Evaluate, SmallGroupsAndFailedRecords) {
  const auto dir = testpaths::scratch("eval");
  auto corpus = read_jsonl(testpaths::fixtures() / "corpus_90.jsonl");
  corpus.resize(32);  // NPS x stub-a/b/c for r01..r10, plus two more
  corpus[3].error = "provider: boom";
  corpus[3].response_text.clear();
  write_jsonl(dir / "c.jsonl", corpus);
  EvaluateOptions o;
  o.corpus = dir / "c.jsonl";
  o.group_by = "condition,model_id";
  o.seed = 1;
  o.out = dir / "r.json";
  Captured c;
  ASSERT_EQ(cmd_evaluate(o, c.io()), 0) << c.err.str();
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  EXPECT_EQ(report["metadata"]["n_failed_excluded"], 1);
  bool saw_excluded = false;
  for (const auto& g : report["groups"]) {
    if (g["n_records"].get<int>() < 4) {
      EXPECT_EQ(g["steerability"]["excluded"], "group too small");
      saw_excluded = true;
    }
  }
  EXPECT_TRUE(saw_excluded);
  fs::remove_all(dir);
}

TEST(Stats, TwoLevelFactor) {
  StatsOptions o;
  o.ratings = testpaths::fixtures() / "ratings_condition.csv";
  o.metric = RatingMetric::quality;
  o.critical_f = 7.71;
  Captured c;
  ASSERT_EQ(cmd_stats(o, c.io()), 0) << c.err.str();
  const std::string out = c.out.str();
  EXPECT_NE(out.find("anova quality: F=8.000000 df=(1,4) significant"), std::string::npos) << out;
  EXPECT_NE(out.find("NPS\tquality\t3\t1.333333\t0.577350"), std::string::npos) << out;

  o.ratings = testpaths::fixtures() / "ratings_tied.csv";
  Captured tied;
  EXPECT_EQ(cmd_stats(o, tied.io()), 1);
  EXPECT_NE(tied.err.str().find("zero within-group variance"), std::string::npos);
}

TEST(Stats, FactorJoinedThroughCorpus) {
  StatsOptions o;
  o.ratings = testpaths::fixtures() / "ratings_join.csv";
  o.corpus = testpaths::fixtures() / "corpus_90.jsonl";
  o.metric = RatingMetric::quality;
  Captured c;
  ASSERT_EQ(cmd_stats(o, c.io()), 0) << c.err.str();
  EXPECT_NE(c.out.str().find("F=7.000000 df=(2,3)"), std::string::npos) << c.out.str();
  o.corpus.reset();
  Captured missing;
  EXPECT_EQ(cmd_stats(o, missing.io()), 1);
}

#ifdef PILOT_BIN
TEST(Binary, UsageErrorsExitTwo) {
  const std::string bin = PILOT_BIN;
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " frobnicate >/dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " stats >/dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " generate >/dev/null 2>&1").c_str())), 2);
  EXPECT_EQ(WEXITSTATUS(std::system((bin + " --help >/dev/null 2>&1").c_str())), 0);
  const std::string stats = bin + " stats --ratings " + (testpaths::fixtures() / "ratings_tied.csv").string() +
                            " >/dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(stats.c_str())), 1);
}

TEST(Binary, ProviderConfigFromEnvironment) {
  const auto dir = testpaths::scratch("env");
  const std::string bin = PILOT_BIN;
  const std::string cmd = "cd " + dir.string() + " && PILOT_PROVIDER_CONFIG=" +
                          (testpaths::fixtures() / "provider_stub.json").string() + " " + bin +
                          " profile elicit --text " + (testpaths::fixtures() / "persona_sample.txt").string() +
                          " --persona-id chem_teacher --model stub-a --seed 7 --out " + (dir / "p.json").string() +
                          " >/dev/null 2>&1";
  ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  EXPECT_EQ(slurp(dir / "p.json"), slurp(testpaths::fixtures() / "chem_teacher_profile.json"));
  const std::string none = "cd " + dir.string() + " && env -u PILOT_PROVIDER_CONFIG " + bin +
                           " profile elicit --text x --persona-id a --model m >/dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(none.c_str())), 2);
  fs::remove_all(dir);
}
#endif
