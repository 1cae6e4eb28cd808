#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pilot/prompt_engine.hpp"
#include "pilot/provider_gateway.hpp"
#include "pilot/steerability_metrics.hpp"

namespace pilot {

std::string_view tool_version() noexcept;

/// Pipeline configuration (JSON). Relative paths resolve against the
/// config file's directory.
///
///   {
///     "provider_config": "provider.json",
///     "personas": "personas.jsonl",
///     "requests": "requests.jsonl",
///     "conditions": ["NPS", "SBS", "HPS"],
///     "models": ["stub-a"],
///     "seed": 7,
///     "k_min": 2, "k_max": 5,
///     "vector_source": "tfidf",
///     "embedding_model": "embed-v1",
///     "group_by": "condition,model_id",
///     "analyzer_model": "stub-a",
///     "max_output_chars": 4000,
///     "temperature": 0.7,
///     "fixed_timestamp": "2025-01-01T00:00:00Z",
///     "corpus": "out/corpus.jsonl",
///     "report": "out/report.json"
///   }
struct RunConfig {
  std::filesystem::path source;  // the config file, empty when built in code
  std::optional<std::filesystem::path> provider_config;
  std::optional<std::filesystem::path> personas;
  std::optional<std::filesystem::path> requests;
  std::vector<Condition> conditions{Condition::nps, Condition::sbs, Condition::hps};
  std::vector<std::string> models;
  std::optional<std::uint64_t> seed;
  int k_min = 2;
  std::optional<int> k_max;
  VectorSource vector_source = VectorSource::tfidf;
  std::string embedding_model;
  std::string group_by = "condition,model_id";
  std::string analyzer_model;
  int max_output_chars = 4000;
  double temperature = 0.7;
  std::optional<std::string> fixed_timestamp;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> report;
  std::string canonical;  // normalized JSON used for the config hash

  /// Throws Error(validation) for unknown keys or bad values, Error(io)
  /// when the file or a referenced path is missing.
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(std::string_view json_text, const std::filesystem::path& base_dir = {});

  /// FNV-1a 64 (hex) over the normalized config with `seed` folded in.
  std::string hash(std::uint64_t seed) const;
};

/// Provider configuration lookup order: explicit path, the run config's
/// provider_config, then $PILOT_PROVIDER_CONFIG / ./pilot_provider.json.
ProviderConfig resolve_provider_config(const std::optional<std::filesystem::path>& explicit_path,
                                       const RunConfig* run);

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

struct ElicitOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> provider;
  std::optional<std::filesystem::path> personas;   // one profile per catalog entry
  std::vector<std::filesystem::path> texts;         // or: sample files for a single persona
  std::string persona_id;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;  // file (single persona) or directory (catalog)
};

struct AverageOptions {
  std::vector<std::filesystem::path> inputs;
  std::optional<std::string> persona_id;
  std::optional<std::filesystem::path> out;
};

struct CheckOptions {
  std::vector<std::filesystem::path> inputs;
  std::optional<std::filesystem::path> out;  // copy of the printed findings
};

struct GenerateOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> provider;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::size_t chunk = 0;  // cells per batch; 0 = 4 x provider concurrency
};

struct EvaluateOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::string> group_by;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::size_t threads = 0;
};

struct StatsOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path ratings;
  std::string factor = "condition";
  std::optional<RatingMetric> metric;  // all four when unset
  std::optional<std::filesystem::path> corpus;  // joined on response_id for factors not in the CSV
  std::optional<double> critical_f;
  std::optional<double> critical_h;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

/// Each command returns the process exit status: 0 success, 1 data or
/// validation failure, 2 usage error. Diagnostics go to `io.err`.
int cmd_profile_elicit(const ElicitOptions& opts, Streams io);
int cmd_profile_average(const AverageOptions& opts, Streams io);
int cmd_profile_validate(const CheckOptions& opts, Streams io);
int cmd_profile_variation(const CheckOptions& opts, Streams io);
int cmd_generate(const GenerateOptions& opts, Streams io);
int cmd_evaluate(const EvaluateOptions& opts, Streams io);
int cmd_stats(const StatsOptions& opts, Streams io);

/// Record id of a matrix cell: persona:condition:request:model.
std::string cell_id(const std::string& persona_id, Condition condition, const std::string& request_id,
                    const std::string& model_id);

}  // namespace pilot
