#include "pilot/provider_gateway.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "pilot/error.hpp"
#include "pilot/prompt_engine.hpp"
#include "text_util.hpp"

namespace pilot {
namespace {

using json = nlohmann::json;

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::validation, std::string("provider config: bad value for '") + key + "'");
  }
}

}  // namespace

std::chrono::milliseconds RetryPolicy::delay_before(int retry) const {
  if (retry < 1) return std::chrono::milliseconds{0};
  const int shift = std::min(retry - 1, 20);
  return backoff_base * (std::int64_t{1} << shift);
}

ProviderConfig ProviderConfig::parse(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("provider config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::parse, "provider config: top level is not an object");
  ProviderConfig cfg;
  const auto kind = get_or<std::string>(doc, "kind", "stub");
  if (kind == "stub") {
    cfg.kind = ProviderKind::stub;
  } else if (kind == "http") {
    cfg.kind = ProviderKind::http;
  } else {
    throw Error(ErrorKind::validation, "provider config: unknown kind '" + kind + "'");
  }
  cfg.endpoint = get_or<std::string>(doc, "endpoint", "");
  cfg.credentials_env = get_or<std::string>(doc, "credentials_env", "");
  if (doc.contains("api_key") || doc.contains("token") || doc.contains("credentials")) {
    throw Error(ErrorKind::validation,
                "provider config: inline credentials are not accepted; name an environment variable in "
                "'credentials_env'");
  }
  cfg.models = get_or<std::map<std::string, std::string>>(doc, "models", {});
  cfg.embedding_model = get_or<std::string>(doc, "embedding_model", "");
  const auto concurrency = get_or<std::int64_t>(doc, "concurrency", 4);
  if (concurrency < 1) throw Error(ErrorKind::validation, "provider config: concurrency must be >= 1");
  cfg.concurrency = static_cast<std::size_t>(concurrency);
  const auto timeout = get_or<std::int64_t>(doc, "timeout_s", 60);
  if (timeout < 1) throw Error(ErrorKind::validation, "provider config: timeout_s must be >= 1");
  cfg.timeout = std::chrono::seconds{timeout};
  if (auto it = doc.find("retry"); it != doc.end() && it->is_object()) {
    cfg.retry.max_retries = static_cast<int>(get_or<std::int64_t>(*it, "max_retries", 3));
    cfg.retry.backoff_base = std::chrono::milliseconds{get_or<std::int64_t>(*it, "backoff_ms", 500)};
  }
  if (cfg.retry.max_retries < 0 || cfg.retry.backoff_base.count() < 0) {
    throw Error(ErrorKind::validation, "provider config: retry settings must be non-negative");
  }
  if (cfg.kind == ProviderKind::http && cfg.endpoint.empty()) {
    throw Error(ErrorKind::validation, "provider config: http provider needs an endpoint");
  }
  return cfg;
}

ProviderConfig ProviderConfig::load(const std::filesystem::path& path) { return parse(detail::read_file(path)); }

std::filesystem::path ProviderConfig::default_path() {
  if (const char* env = std::getenv("PILOT_PROVIDER_CONFIG"); env != nullptr && *env != '\0') return env;
  return "pilot_provider.json";
}

std::string ProviderConfig::resolve_model(const std::string& model_id) const {
  auto it = models.find(model_id);
  return it == models.end() ? model_id : it->second;
}

Gateway::Gateway(std::shared_ptr<TextProvider> text, std::shared_ptr<EmbeddingProvider> embeddings,
                 ProviderConfig config, Sleeper sleeper)
    : text_(std::move(text)), embeddings_(std::move(embeddings)), config_(std::move(config)),
      sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

GenerationResult Gateway::generate(const GenerationRequest& request) const {
  if (request.prompt.empty()) throw Error(ErrorKind::invalid_input, "generation request: empty prompt");
  if (request.max_output_chars <= 0) {
    throw Error(ErrorKind::invalid_input, "generation request: max_output_chars must be positive");
  }
  if (!(request.temperature >= 0.0)) {
    throw Error(ErrorKind::invalid_input, "generation request: temperature must be >= 0");
  }
  if (!text_) throw Error(ErrorKind::provider, "no text provider configured");

  GenerationRequest wire = request;
  wire.model_id = config_.resolve_model(request.model_id);
  const int max_attempts = config_.retry.max_retries + 1;
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(config_.retry.delay_before(attempt - 1));
    const auto start = std::chrono::steady_clock::now();
    ProviderReply reply = text_->complete(wire);
    const auto elapsed = std::chrono::steady_clock::now() - start;
    switch (reply.status) {
      case ReplyStatus::ok: {
        if (detail::trim(reply.text).empty()) throw Error(ErrorKind::provider, "empty generation");
        GenerationResult result;
        result.text = std::move(reply.text);
        result.model_id = request.model_id;
        result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        result.attempt = attempt;
        return result;
      }
      case ReplyStatus::transient:
        last_error = reply.message.empty() ? "transient provider failure" : reply.message;
        break;
      case ReplyStatus::failed:
        throw Error(ErrorKind::provider,
                    "provider error: " + (reply.message.empty() ? std::string("unknown") : reply.message));
    }
  }
  throw Error(ErrorKind::provider,
              "provider failed after " + std::to_string(max_attempts) + " attempts: " + last_error);
}

std::vector<GenerationOutcome> Gateway::generate_all(std::span<const GenerationRequest> requests) const {
  std::vector<GenerationOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        outcomes[i].result = generate(requests[i]);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::min(config_.concurrency, requests.size());
  if (n_workers <= 1) {
    worker();
    return outcomes;
  }
  std::vector<std::jthread> pool;
  pool.reserve(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  pool.clear();  // joins
  return outcomes;
}

std::string strip_code_fence(std::string_view payload) {
  std::string_view body = detail::trim(payload);
  if (body.starts_with("```")) {
    if (body.size() < 6 || !body.ends_with("```")) {
      throw Error(ErrorKind::parse, "non-document prefix: unterminated code fence");
    }
    body.remove_suffix(3);
    const std::size_t eol = body.find('\n');
    if (eol == std::string_view::npos) throw Error(ErrorKind::parse, "non-document prefix: empty code fence");
    const std::string_view info = detail::trim(body.substr(3, eol - 3));
    if (info.find(' ') != std::string_view::npos) {
      throw Error(ErrorKind::parse, "non-document prefix: malformed fence info string");
    }
    body = detail::trim(body.substr(eol + 1));
  }
  if (body.empty() || body.front() != '{') throw Error(ErrorKind::parse, "non-document prefix");
  return std::string(body);
}

PilotProfile Gateway::elicit_profile(std::span<const std::string> persona_texts, const std::string& analyzer_model,
                                     std::string persona_id, std::optional<std::uint64_t> seed) const {
  GenerationRequest req;
  req.model_id = analyzer_model;
  req.prompt = render_elicitation(persona_texts);
  req.max_output_chars = 20000;
  req.temperature = 0.0;
  req.seed = seed;
  const GenerationResult result = generate(req);
  return parse_profile(strip_code_fence(result.text), std::move(persona_id))
      .with_source(ProfileSource::elicited);
}

std::vector<EmbeddingVector> Gateway::embed(std::span<const std::string> texts, const std::string& embed_model) const {
  if (texts.empty()) throw Error(ErrorKind::invalid_input, "embed: empty input");
  if (!embeddings_) throw Error(ErrorKind::provider, "no embedding provider configured");
  auto raw = embeddings_->embed_batch(texts, config_.resolve_model(embed_model));
  if (raw.size() != texts.size()) {
    throw Error(ErrorKind::provider, "count mismatch: " + std::to_string(raw.size()) + " vectors for " +
                                         std::to_string(texts.size()) + " texts");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(raw.size());
  const std::size_t dim = raw.front().size();
  for (auto& v : raw) {
    if (v.empty()) throw Error(ErrorKind::provider, "embedding with zero dimensions");
    if (v.size() != dim) throw Error(ErrorKind::provider, "dimension mismatch within batch");
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorKind::provider, "non-finite embedding value");
    }
    out.push_back(EmbeddingVector{std::move(v)});
  }
  return out;
}

std::unique_ptr<Gateway> make_gateway(const ProviderConfig& config, Sleeper sleeper) {
  if (config.kind == ProviderKind::stub) {
    auto stub = std::make_shared<StubProvider>();
    return std::make_unique<Gateway>(stub, stub, config, std::move(sleeper));
  }
  auto http = std::make_shared<HttpProvider>(config);
  return std::make_unique<Gateway>(http, http, config, std::move(sleeper));
}

}  // namespace pilot
