#include "pilot/app.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pilot/corpus_store.hpp"
#include "pilot/diversity_metrics.hpp"
#include "pilot/error.hpp"
#include "pilot/quality_stats.hpp"
#include "pilot/schema_profile.hpp"
#include "text_util.hpp"

#ifndef PILOT_VERSION
#define PILOT_VERSION "0.0.0"
#endif

namespace pilot {
namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorKind::usage, message); }
[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::validation, "config: " + message); }

template <typename F>
int guarded(Streams io, const char* command, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    io.err << command << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    io.err << command << ": " << e.what() << "\n";
    return 1;
  }
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
}

std::uint64_t cell_seed(std::uint64_t seed, const std::string& id) {
  return detail::splitmix64(seed ^ detail::fnv1a64(id));
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

ordered_json diversity_json(const DiversityScores& d) {
  ordered_json o;
  o["n_texts"] = d.n_texts;
  o["ttr"] = opt_json(d.ttr);
  for (int n = 1; n <= kMaxNgram; ++n) o["ngram_" + std::to_string(n) + "_diversity"] = opt_json(d.ngram_diversity[n - 1]);
  for (int n = 1; n <= kMaxNgram; ++n) o["ngram_" + std::to_string(n) + "_repetition"] = opt_json(d.repetition[n - 1]);
  o["compression_ratio"] = opt_json(d.compression_ratio);
  o["compression_small_samples"] = d.compression_small_samples;
  o["fk_grade"] = opt_json(d.fk_grade);
  o["length_chars"] = opt_json(d.length_chars);
  ordered_json ex = ordered_json::object();
  for (const auto& [k, v] : d.exclusions) ex[k] = v;
  o["exclusions"] = ex;
  return o;
}

ordered_json steerability_json(const SteerabilityReport& s) {
  ordered_json o;
  o["n_docs"] = s.n_docs;
  o["vector_source"] = std::string(to_string(s.source));
  o["k_range"] = {s.k_range.first, s.k_range.second};
  if (s.degenerate) {
    o["degenerate"] = true;
    o["reason"] = "all document vectors identical";
    return o;
  }
  o["degenerate"] = false;
  o["optimal_k"] = *s.optimal_k;
  o["silhouette"] = *s.silhouette;
  o["content_purity"] = *s.content_purity;
  o["persona_purity"] = *s.persona_purity;
  o["avg_cluster_size"] = *s.avg_cluster_size;
  o["within_cluster_deviation"] = *s.within_cluster_deviation;
  ordered_json by_k = ordered_json::array();
  for (const auto& [k, sil] : s.silhouette_by_k) by_k.push_back({{"k", k}, {"silhouette", sil}});
  o["silhouette_by_k"] = by_k;
  return o;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

fs::path require_path(const std::optional<fs::path>& p, const char* what) {
  if (!p) usage(std::string("missing ") + what);
  return *p;
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& cli, const RunConfig* run) {
  if (cli) return *cli;
  if (run && run->seed) return *run->seed;
  usage("no seed: pass --seed or set \"seed\" in the config");
}

}  // namespace

std::string_view tool_version() noexcept { return PILOT_VERSION; }

std::string cell_id(const std::string& persona_id, Condition condition, const std::string& request_id,
                    const std::string& model_id) {
  return persona_id + ":" + std::string(to_string(condition)) + ":" + request_id + ":" + model_id;
}

RunConfig RunConfig::parse(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::parse, "config: top level is not an object");

  static const std::set<std::string> known = {
      "provider_config", "personas", "requests", "conditions", "models", "seed", "k_min", "k_max",
      "vector_source", "embedding_model", "group_by", "analyzer_model", "max_output_chars", "temperature",
      "fixed_timestamp", "corpus", "report"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) invalid("unknown key '" + key + "'");
  }

  RunConfig cfg;
  auto path_of = [&](const char* key) -> std::optional<fs::path> {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    if (!doc[key].is_string()) invalid(std::string("'") + key + "' must be a path string");
    fs::path p = doc[key].get<std::string>();
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  auto get = [&]<typename T>(const char* key, T& target) {
    if (!doc.contains(key) || doc[key].is_null()) return;
    try {
      target = doc[key].get<T>();
    } catch (const json::exception&) {
      invalid(std::string("bad value for '") + key + "'");
    }
  };

  cfg.provider_config = path_of("provider_config");
  cfg.personas = path_of("personas");
  cfg.requests = path_of("requests");
  cfg.corpus = path_of("corpus");
  cfg.report = path_of("report");

  if (doc.contains("conditions")) {
    std::vector<std::string> names;
    get("conditions", names);
    cfg.conditions.clear();
    for (const auto& n : names) {
      auto c = parse_condition(n);
      if (!c) invalid("unknown condition '" + n + "'");
      if (std::find(cfg.conditions.begin(), cfg.conditions.end(), *c) != cfg.conditions.end()) {
        invalid("duplicate condition '" + n + "'");
      }
      cfg.conditions.push_back(*c);
    }
    if (cfg.conditions.empty()) invalid("'conditions' is empty");
  }
  get("models", cfg.models);
  if (doc.contains("seed") && !doc["seed"].is_null()) {
    if (!doc["seed"].is_number_unsigned()) invalid("'seed' must be a non-negative integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  get("k_min", cfg.k_min);
  if (doc.contains("k_max") && !doc["k_max"].is_null()) {
    int k = 0;
    get("k_max", k);
    cfg.k_max = k;
  }
  if (cfg.k_min < 2) invalid("'k_min' must be >= 2");
  if (cfg.k_max && *cfg.k_max < cfg.k_min) invalid("'k_max' must be >= k_min");
  std::string source = "tfidf";
  get("vector_source", source);
  if (source == "tfidf") {
    cfg.vector_source = VectorSource::tfidf;
  } else if (source == "embedding") {
    cfg.vector_source = VectorSource::embedding;
  } else {
    invalid("unknown vector_source '" + source + "'");
  }
  get("embedding_model", cfg.embedding_model);
  get("group_by", cfg.group_by);
  GroupKey::parse(cfg.group_by);
  get("analyzer_model", cfg.analyzer_model);
  get("max_output_chars", cfg.max_output_chars);
  if (cfg.max_output_chars < 1) invalid("'max_output_chars' must be positive");
  get("temperature", cfg.temperature);
  if (cfg.temperature < 0.0) invalid("'temperature' must be >= 0");
  if (doc.contains("fixed_timestamp") && !doc["fixed_timestamp"].is_null()) {
    std::string ts;
    get("fixed_timestamp", ts);
    cfg.fixed_timestamp = ts;
  }

  json canonical = doc;
  canonical.erase("seed");
  cfg.canonical = canonical.dump();
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  RunConfig cfg = parse(detail::read_file(path), path.parent_path());
  cfg.source = path;
  for (const auto* p : {&cfg.provider_config, &cfg.personas, &cfg.requests}) {
    if (*p && !fs::exists(**p)) throw Error(ErrorKind::io, "config: no such file: " + (*p)->string());
  }
  if (cfg.provider_config) {
    // Fold the provider settings into the hash input.
    json canonical = json::parse(cfg.canonical);
    canonical["provider_config"] = json::parse(detail::read_file(*cfg.provider_config));
    cfg.canonical = canonical.dump();
  }
  return cfg;
}

std::string RunConfig::hash(std::uint64_t seed) const {
  return detail::hex64(detail::fnv1a64(canonical + "\nseed=" + std::to_string(seed)));
}

ProviderConfig resolve_provider_config(const std::optional<fs::path>& explicit_path, const RunConfig* run) {
  if (explicit_path) return ProviderConfig::load(*explicit_path);
  if (run && run->provider_config) return ProviderConfig::load(*run->provider_config);
  const fs::path fallback = ProviderConfig::default_path();
  if (!fs::exists(fallback)) {
    usage("no provider config: pass --provider, set \"provider_config\", or set PILOT_PROVIDER_CONFIG");
  }
  return ProviderConfig::load(fallback);
}

// ---- profile ---------------------------------------------------------------

int cmd_profile_elicit(const ElicitOptions& opts, Streams io) {
  return guarded(io, "profile elicit", [&] {
    std::optional<RunConfig> run;
    if (opts.config) run = RunConfig::load(*opts.config);
    const ProviderConfig provider = resolve_provider_config(opts.provider, run ? &*run : nullptr);
    std::string model = opts.model;
    if (model.empty() && run) model = run->analyzer_model;
    if (model.empty() && run && !run->models.empty()) model = run->models.front();
    if (model.empty()) usage("no analyzer model: pass --model or set \"analyzer_model\"");
    const std::optional<std::uint64_t> seed = opts.seed ? opts.seed : (run ? run->seed : std::nullopt);
    const auto gateway = make_gateway(provider);

    std::optional<fs::path> catalog = opts.personas;
    if (!catalog && opts.texts.empty() && run) catalog = run->personas;

    if (catalog) {
      if (!opts.texts.empty()) usage("pass either a persona catalog or --text files, not both");
      const fs::path dir = require_path(opts.out, "--out directory");
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
      for (const auto& entry : read_persona_catalog(*catalog)) {
        const std::vector<std::string> texts{entry.persona.description};
        const auto profile = gateway->elicit_profile(texts, model, entry.persona.id, seed);
        const fs::path target = dir / (entry.persona.id + ".json");
        write_profile_file(target, profile);
        io.out << "wrote " << target.string() << "\n";
      }
      return 0;
    }

    if (opts.texts.empty()) usage("nothing to analyze: pass --personas or --text");
    if (opts.persona_id.empty()) usage("--persona-id is required with --text");
    std::vector<std::string> texts;
    for (const auto& p : opts.texts) texts.push_back(detail::read_file(p));
    const auto profile = gateway->elicit_profile(texts, model, opts.persona_id, seed);
    if (opts.out) {
      ensure_parent(*opts.out);
      write_profile_file(*opts.out, profile);
      io.out << "wrote " << opts.out->string() << "\n";
    } else {
      io.out << serialize_profile(profile) << "\n";
    }
    return 0;
  });
}

int cmd_profile_average(const AverageOptions& opts, Streams io) {
  return guarded(io, "profile average", [&] {
    if (opts.inputs.empty()) usage("at least one --in profile is required");
    std::vector<PilotProfile> profiles;
    for (const auto& p : opts.inputs) profiles.push_back(read_profile_file(p));
    const auto avg = average_profiles(profiles, opts.persona_id);
    if (opts.out) {
      ensure_parent(*opts.out);
      write_profile_file(*opts.out, avg);
      io.out << "wrote " << opts.out->string() << "\n";
    } else {
      io.out << serialize_profile(avg) << "\n";
    }
    return 0;
  });
}

int cmd_profile_validate(const CheckOptions& opts, Streams io) {
  return guarded(io, "profile validate", [&] {
    if (opts.inputs.empty()) usage("no profile files given");
    std::ostringstream findings;
    int status = 0;
    for (const auto& p : opts.inputs) {
      try {
        (void)read_profile_file(p);
        findings << "ok " << p.string() << "\n";
      } catch (const Error& e) {
        findings << "invalid " << p.string() << ": " << e.what() << "\n";
        io.err << p.string() << ": " << e.what() << "\n";
        status = 1;
      }
    }
    io.out << findings.str();
    if (opts.out) detail::write_file_atomic(*opts.out, findings.str());
    return status;
  });
}

int cmd_profile_variation(const CheckOptions& opts, Streams io) {
  return guarded(io, "profile variation", [&] {
    if (opts.inputs.size() < 2) usage("variation needs at least two profile files");
    std::vector<PilotProfile> profiles;
    for (const auto& p : opts.inputs) profiles.push_back(read_profile_file(p));
    const auto report = variation_report(profiles);
    std::ostringstream findings;
    for (const auto& v : report.violations) {
      findings << "violation " << v.path.str() << " spread=" << detail::format_fixed(v.observed, 6)
               << " allowed=" << detail::format_fixed(v.allowed, 6) << "\n";
    }
    findings << report.violations.size() << " violation(s) across " << profiles.size() << " profiles\n";
    io.out << findings.str();
    if (opts.out) detail::write_file_atomic(*opts.out, findings.str());
    return report.violations.empty() ? 0 : 1;
  });
}

// ---- generate ----------------------------------------------------------------

int cmd_generate(const GenerateOptions& opts, Streams io) {
  return guarded(io, "generate", [&] {
    if (!opts.config) usage("--config is required");
    const RunConfig run = RunConfig::load(*opts.config);
    const std::uint64_t seed = require_seed(opts.seed, &run);
    const fs::path out = opts.out ? *opts.out : require_path(run.corpus, "output path (--out or \"corpus\")");
    if (!run.personas) invalid("'personas' is required");
    if (!run.requests) invalid("'requests' is required");
    if (run.models.empty()) invalid("'models' is empty");

    const ProviderConfig provider = resolve_provider_config(opts.provider, &run);
    const auto gateway = make_gateway(provider);

    std::vector<Persona> personas;
    ProfileCatalog profiles;
    for (auto& entry : read_persona_catalog(*run.personas)) {
      if (entry.profile_path) profiles.emplace(entry.persona.id, read_profile_file(*entry.profile_path));
      personas.push_back(std::move(entry.persona));
    }
    const auto requests = read_request_catalog(*run.requests);
    const std::string config_hash = run.hash(seed);
    const std::string created_at = run.fixed_timestamp ? *run.fixed_timestamp
                                   : provider.kind == ProviderKind::stub ? "1970-01-01T00:00:00Z"
                                                                         : now_rfc3339();

    Corpus existing;
    if (fs::exists(out)) {
      existing = read_jsonl(out);
      const auto kept = std::count_if(existing.begin(), existing.end(), [](const auto& r) { return !r.failed(); });
      if (static_cast<std::size_t>(kept) != existing.size()) {
        std::erase_if(existing, [](const ResponseRecord& r) { return r.failed(); });
        write_jsonl(out, existing);  // failed cells are retried
      }
    } else {
      ensure_parent(out);
      write_jsonl(out, {});
    }
    std::set<std::string> done;
    for (const auto& r : existing) done.insert(r.id);

    struct Pending {
      ResponseRecord record;
      GenerationRequest request;
    };
    std::vector<Pending> pending;
    std::size_t total = 0;
    for_each_cell(personas, run.conditions, requests, run.models, profiles, [&](const MatrixCell& cell) {
      ++total;
      const std::string id = cell_id(cell.persona.id, cell.condition, cell.request.id, cell.model_id);
      if (done.contains(id)) return;
      const PilotProfile* profile = nullptr;
      if (uses_profile(cell.condition)) profile = &profiles.at(cell.persona.id);
      const auto bundle = render(cell.condition, cell.persona, profile, cell.request, cell.model_id);
      Pending p;
      p.record.id = id;
      p.record.base_persona = cell.persona.base_persona.value_or(cell.persona.id);
      p.record.sub_persona = cell.persona.id;
      p.record.condition = cell.condition;
      p.record.model_id = cell.model_id;
      p.record.content_type = cell.request.content_type;
      p.record.request_id = cell.request.id;
      p.record.request_text = cell.request.text;
      p.record.created_at = created_at;
      p.record.config_hash = config_hash;
      p.request.model_id = cell.model_id;
      p.request.prompt = bundle.rendered_prompt;
      p.request.max_output_chars = run.max_output_chars;
      p.request.temperature = run.temperature;
      p.request.seed = cell_seed(seed, id);
      pending.push_back(std::move(p));
    });

    const std::size_t chunk = opts.chunk ? opts.chunk : std::max<std::size_t>(1, provider.concurrency * 4);
    std::size_t failed = 0, produced = 0;
    const std::size_t skipped = total - pending.size();
    for (std::size_t begin = 0; begin < pending.size(); begin += chunk) {
      const std::size_t end = std::min(pending.size(), begin + chunk);
      std::vector<GenerationRequest> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(pending[i].request);
      const auto outcomes = gateway->generate_all(batch);
      std::vector<ResponseRecord> records;
      for (std::size_t i = begin; i < end; ++i) {
        ResponseRecord rec = std::move(pending[i].record);
        const auto& outcome = outcomes[i - begin];
        if (!outcome.result) {
          rec.error = outcome.error;
        } else if (uses_profile(rec.condition)) {
          try {
            const auto tagged = parse_tagged_output(outcome.result->text);
            rec.response_text = tagged.response;
            if (!tagged.explanation.empty()) rec.explanation = tagged.explanation;
          } catch (const Error& e) {
            rec.error = e.what();
          }
        } else {
          rec.response_text = std::string(detail::trim(outcome.result->text));
          if (rec.response_text.empty()) rec.error = "empty generation";
        }
        if (rec.failed()) ++failed;
        records.push_back(std::move(rec));
      }
      append_jsonl(out, records);
      produced += records.size();
      io.err << "generate: " << skipped + produced << "/" << total << " cells (" << failed << " failed)\n";
    }
    io.out << "corpus " << out.string() << ": " << produced << " generated, " << skipped << " already present, "
           << failed << " failed\n";
    return failed == 0 ? 0 : 1;
  });
}

// ---- evaluate ----------------------------------------------------------------

int cmd_evaluate(const EvaluateOptions& opts, Streams io) {
  return guarded(io, "evaluate", [&] {
    std::optional<RunConfig> run;
    if (opts.config) run = RunConfig::load(*opts.config);
    const std::uint64_t seed = require_seed(opts.seed, run ? &*run : nullptr);
    std::optional<fs::path> corpus_path = opts.corpus;
    if (!corpus_path && run) corpus_path = run->corpus;
    const fs::path in = require_path(corpus_path, "corpus path (--corpus or \"corpus\")");
    std::optional<fs::path> out = opts.out;
    if (!out && run) out = run->report;

    const std::string spec = opts.group_by ? *opts.group_by : run ? run->group_by : "condition,model_id";
    const GroupKey key = GroupKey::parse(spec);

    Corpus all = read_jsonl(in);
    Corpus corpus;
    std::size_t n_failed = 0;
    for (auto& r : all) {
      if (r.failed()) {
        ++n_failed;
      } else {
        corpus.push_back(std::move(r));
      }
    }
    if (corpus.empty()) throw Error(ErrorKind::validation, "empty grouping result: no usable records");
    const GroupMap groups = group_by(corpus, key);

    std::optional<std::string> config_hash;
    std::size_t mismatched = 0;
    if (run) {
      config_hash = run->hash(seed);
      for (const auto& r : corpus) {
        if (r.config_hash && *r.config_hash != *config_hash) ++mismatched;
      }
    }

    SteerabilityConfig steer;
    steer.seed = seed;
    steer.threads = 1;
    std::unique_ptr<Gateway> gateway;
    if (run) {
      steer.k_min = run->k_min;
      steer.k_max = run->k_max;
      steer.source = run->vector_source;
      if (steer.source == VectorSource::embedding) {
        gateway = make_gateway(resolve_provider_config(std::nullopt, &*run));
        steer.gateway = gateway.get();
        steer.embed_model = !run->embedding_model.empty() ? run->embedding_model : gateway->config().embedding_model;
        if (steer.embed_model.empty()) invalid("embedding source needs 'embedding_model'");
      }
    }

    const PatternSet& patterns = PatternSet::bundled();
    std::vector<const std::pair<const std::vector<std::string>, Corpus>*> items;
    for (const auto& g : groups) items.push_back(&g);
    std::vector<ordered_json> results(items.size());
    std::vector<std::exception_ptr> errors(items.size());

    auto evaluate_group = [&](std::size_t i) {
      const auto& [values, members] = *items[i];
      ordered_json g;
      ordered_json k = ordered_json::object();
      for (std::size_t f = 0; f < key.fields().size(); ++f) k[std::string(to_string(key.fields()[f]))] = values[f];
      g["key"] = k;
      g["n_records"] = members.size();
      g["diversity"] = diversity_json(diversity_summary(members));
      if (members.size() < static_cast<std::size_t>(min_steerability_group(steer))) {
        g["steerability"] = {{"excluded", "group too small"}};
      } else {
        g["steerability"] = steerability_json(steerability_summary(members, steer));
      }
      g["quality"] = {{"persona_repetition_rate", flag_rate(members, QualityFlag::persona_repetition, patterns)},
                      {"placeholder_rate", flag_rate(members, QualityFlag::placeholder, patterns)}};
      results[i] = std::move(g);
    };

    std::size_t threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, items.size());
    {
      std::atomic<std::size_t> next{0};
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
              evaluate_group(i);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    ordered_json meta;
    meta["tool_version"] = std::string(tool_version());
    meta["seed"] = seed;
    meta["config_hash"] = config_hash ? json(*config_hash) : json(nullptr);
    meta["config_mismatch"] = mismatched > 0;
    meta["mismatched_records"] = mismatched;
    ordered_json fields = ordered_json::array();
    for (auto f : key.fields()) fields.push_back(std::string(to_string(f)));
    meta["group_by"] = fields;
    meta["vector_source"] = std::string(to_string(steer.source));
    meta["detector_pattern_version"] = patterns.version();
    meta["n_records"] = corpus.size();
    meta["n_failed_excluded"] = n_failed;
    meta["n_groups"] = items.size();
    meta["min_steerability_group"] = min_steerability_group(steer);
    meta["definitions"] = {
        {"distance", "euclidean on unit-normalized document vectors"},
        {"optimal_k", "k in [k_min, k_max] maximizing silhouette; lowest-inertia of 5 seeded k-means++ runs per k; "
                      "ties to the smaller k; default k_max = min(N-1, ceil(N/2))"},
        {"within_cluster_deviation", "mean over clusters of the mean member distance to the centroid"},
        {"avg_cluster_size", "n_docs / optimal_k"},
        {"repetition", "1 - n-gram diversity"},
        {"aggregation", "per-group mean of per-response scores; failed records excluded"}};

    ordered_json report;
    report["metadata"] = meta;
    ordered_json list = ordered_json::array();
    for (auto& r : results) list.push_back(std::move(r));
    report["groups"] = list;

    const std::string text = report.dump(2) + "\n";
    if (out) {
      ensure_parent(*out);
      detail::write_file_atomic(*out, text);
      io.out << "report " << out->string() << ": " << items.size() << " group(s), " << corpus.size() << " records";
      if (n_failed) io.out << ", " << n_failed << " failed record(s) excluded";
      io.out << "\n";
    } else {
      io.out << text;
    }
    if (mismatched) io.err << "evaluate: warning: " << mismatched << " record(s) were generated under a different config\n";
    return 0;
  });
}

// ---- stats -------------------------------------------------------------------

int cmd_stats(const StatsOptions& opts, Streams io) {
  return guarded(io, "stats", [&] {
    if (opts.ratings.empty()) usage("--ratings is required");
    std::optional<RunConfig> run;
    if (opts.config) run = RunConfig::load(*opts.config);
    const auto ratings = read_ratings_csv(opts.ratings);
    if (ratings.empty()) throw Error(ErrorKind::validation, "no ratings in " + opts.ratings.string());

    std::optional<Corpus> corpus;
    std::optional<fs::path> corpus_path = opts.corpus;
    if (!corpus_path && run) corpus_path = run->corpus;
    if (corpus_path) corpus = read_jsonl(*corpus_path);
    const auto levels = rating_levels(ratings, opts.factor, corpus ? &*corpus : nullptr);

    std::ostringstream table;
    const auto summary = likert_summary(ratings, levels);
    table << "factor " << opts.factor << "\n";
    table << "level\tmetric\tn\tmean\tsd\n";
    for (const auto& [key, cell] : summary) {
      if (opts.metric && key.second != *opts.metric) continue;
      table << key.first << "\t" << to_string(key.second) << "\t" << cell.n << "\t" << fixed6(cell.mean) << "\t"
            << (cell.sd ? fixed6(*cell.sd) : std::string("NA")) << "\n";
    }

    int status = 0;
    std::vector<RatingMetric> metrics;
    if (opts.metric) {
      metrics.push_back(*opts.metric);
    } else {
      metrics.assign(kRatingMetrics.begin(), kRatingMetrics.end());
    }
    for (RatingMetric metric : metrics) {
      std::vector<std::vector<double>> groups;
      for (auto& [_, values] : group_scores(ratings, levels, metric)) groups.push_back(std::move(values));
      const std::string name(to_string(metric));
      try {
        const auto f = one_way_anova(groups);
        table << "anova " << name << ": F=" << fixed6(f.statistic) << " df=(" << f.df_between << ","
              << *f.df_within << ")";
        if (opts.critical_f) table << (f.exceeds(*opts.critical_f) ? " significant" : " not-significant") << " (F_crit="
                                   << fixed6(*opts.critical_f) << ")";
        table << "\n";
      } catch (const Error& e) {
        table << "anova " << name << ": error: " << e.what() << "\n";
        io.err << "stats: anova " << name << ": " << e.what() << "\n";
        status = 1;
      }
      try {
        const auto h = kruskal_wallis(groups);
        table << "kruskal-wallis " << name << ": H=" << fixed6(h.statistic) << " df=" << h.df_between;
        if (opts.critical_h) table << (h.exceeds(*opts.critical_h) ? " significant" : " not-significant") << " (H_crit="
                                   << fixed6(*opts.critical_h) << ")";
        table << "\n";
      } catch (const Error& e) {
        table << "kruskal-wallis " << name << ": error: " << e.what() << "\n";
        io.err << "stats: kruskal-wallis " << name << ": " << e.what() << "\n";
        status = 1;
      }
    }
    io.out << table.str();
    if (opts.out) {
      ensure_parent(*opts.out);
      detail::write_file_atomic(*opts.out, table.str());
    }
    return status;
  });
}

}  // namespace pilot
