#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pilot/app.hpp"
#include "pilot/corpus_store.hpp"

namespace fs = std::filesystem;

namespace {

// Options every subcommand accepts.
struct Common {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline configuration file (JSON)");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--out", c.out, "Output path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-steered generation and evaluation toolkit", "pilot"};
  app.set_version_flag("--version", std::string(pilot::tool_version()));
  app.require_subcommand(1);

  pilot::Streams io{std::cout, std::cerr};
  int status = 0;

  auto* profile = app.add_subcommand("profile", "Profile elicitation, averaging and checks");
  profile->require_subcommand(1);

  Common elicit_c;
  pilot::ElicitOptions elicit;
  auto* elicit_cmd = profile->add_subcommand("elicit", "Derive profiles from persona text with an analyzer model");
  add_common(elicit_cmd, elicit_c);
  elicit_cmd->add_option("--provider", elicit.provider, "Provider configuration file");
  elicit_cmd->add_option("--personas", elicit.personas, "Persona catalog (JSONL); --out names a directory");
  elicit_cmd->add_option("--text", elicit.texts, "Sample text file (repeatable)");
  elicit_cmd->add_option("--persona-id", elicit.persona_id, "Persona id for --text input");
  elicit_cmd->add_option("--model", elicit.model, "Analyzer model id");
  elicit_cmd->callback([&] {
    elicit.config = elicit_c.config;
    elicit.seed = elicit_c.seed;
    elicit.out = elicit_c.out;
    status = pilot::cmd_profile_elicit(elicit, io);
  });

  Common average_c;
  pilot::AverageOptions average;
  auto* average_cmd = profile->add_subcommand("average", "Average sub-persona profiles into one profile");
  add_common(average_cmd, average_c);
  average_cmd->add_option("--in", average.inputs, "Input profile (repeatable)")->required();
  average_cmd->add_option("--persona-id", average.persona_id, "Persona id of the result");
  average_cmd->callback([&] {
    average.out = average_c.out;
    status = pilot::cmd_profile_average(average, io);
  });

  Common validate_c;
  pilot::CheckOptions validate;
  auto* validate_cmd = profile->add_subcommand("validate", "Check profile files against the schema");
  add_common(validate_cmd, validate_c);
  validate_cmd->add_option("profiles", validate.inputs, "Profile files")->required();
  validate_cmd->callback([&] {
    validate.out = validate_c.out;
    status = pilot::cmd_profile_validate(validate, io);
  });

  Common variation_c;
  pilot::CheckOptions variation;
  auto* variation_cmd = profile->add_subcommand("variation", "Report tier-limit violations across profiles");
  add_common(variation_cmd, variation_c);
  variation_cmd->add_option("profiles", variation.inputs, "Profile files")->required();
  variation_cmd->callback([&] {
    variation.out = variation_c.out;
    status = pilot::cmd_profile_variation(variation, io);
  });

  Common generate_c;
  pilot::GenerateOptions generate;
  auto* generate_cmd = app.add_subcommand("generate", "Generate the response corpus for the experiment matrix");
  add_common(generate_cmd, generate_c);
  generate_cmd->add_option("--provider", generate.provider, "Provider configuration file");
  generate_cmd->add_option("--chunk", generate.chunk, "Cells per batch");
  generate_cmd->callback([&] {
    generate.config = generate_c.config;
    generate.seed = generate_c.seed;
    generate.out = generate_c.out;
    status = pilot::cmd_generate(generate, io);
  });

  Common evaluate_c;
  pilot::EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute diversity, steerability and quality metrics");
  add_common(evaluate_cmd, evaluate_c);
  evaluate_cmd->add_option("--corpus", evaluate.corpus, "Corpus file (JSONL)");
  evaluate_cmd->add_option("--group-by", evaluate.group_by, "Comma-separated grouping fields");
  evaluate_cmd->add_option("--threads", evaluate.threads, "Worker threads (0 = all cores)");
  evaluate_cmd->callback([&] {
    evaluate.config = evaluate_c.config;
    evaluate.seed = evaluate_c.seed;
    evaluate.out = evaluate_c.out;
    status = pilot::cmd_evaluate(evaluate, io);
  });

  Common stats_c;
  pilot::StatsOptions stats;
  std::string metric;
  auto* stats_cmd = app.add_subcommand("stats", "Likert summary, one-way ANOVA and Kruskal-Wallis on ratings");
  add_common(stats_cmd, stats_c);
  stats_cmd->add_option("--ratings", stats.ratings, "Ratings file (CSV)")->required();
  stats_cmd->add_option("--factor", stats.factor, "Grouping factor")->capture_default_str();
  stats_cmd->add_option("--metric", metric, "human_likeness, content_adherence, quality or helpfulness");
  stats_cmd->add_option("--corpus", stats.corpus, "Corpus joined on response_id for record-level factors");
  stats_cmd->add_option("--critical-f", stats.critical_f, "Critical F value to compare against");
  stats_cmd->add_option("--critical-h", stats.critical_h, "Critical H value to compare against");
  stats_cmd->callback([&] {
    stats.config = stats_c.config;
    stats.seed = stats_c.seed;
    stats.out = stats_c.out;
    if (!metric.empty()) {
      stats.metric = pilot::parse_rating_metric(metric);
      if (!stats.metric) {
        std::cerr << "stats: unknown metric '" << metric << "'\n";
        status = 2;
        return;
      }
    }
    status = pilot::cmd_stats(stats, io);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return status;
}
