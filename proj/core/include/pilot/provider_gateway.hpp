#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pilot/schema_profile.hpp"

namespace pilot {

struct GenerationRequest {
  std::string model_id;
  std::string prompt;
  int max_output_chars = 4000;
  double temperature = 0.7;
  std::optional<std::uint64_t> seed;
};

struct GenerationResult {
  std::string text;
  std::string model_id;
  std::int64_t latency_ms = 0;
  int attempt = 1;
};

enum class ReplyStatus {
  ok,
  transient,  // throttled / unavailable / timed out: retried
  failed,     // hard provider error: not retried
};

/// One provider round trip, before any retry policy.
struct ProviderReply {
  ReplyStatus status = ReplyStatus::ok;
  std::string text;
  std::string message;
};

/// A text-generation backend. Implementations must be safe to call from
/// several threads at once.
class TextProvider {
 public:
  virtual ~TextProvider() = default;
  virtual ProviderReply complete(const GenerationRequest& request) = 0;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const noexcept { return values.size(); }
};

/// An embedding backend. Throws Error(provider) on failure.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts,
                                                       const std::string& model_id) = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};

  /// Delay before retry number `retry` (1-based): base * 2^(retry-1).
  std::chrono::milliseconds delay_before(int retry) const;
};

enum class ProviderKind { stub, http };

/// Provider configuration file (JSON):
///
///   {
///     "kind": "http",                        // or "stub"
///     "endpoint": "https://llm.example.org",
///     "credentials_env": "PILOT_API_KEY",    // name of an env var, never the secret
///     "models": {"llama": "vendor-model-id"},
///     "embedding_model": "embed-v1",
///     "concurrency": 4,
///     "timeout_s": 60,
///     "retry": {"max_retries": 3, "backoff_ms": 500}
///   }
struct ProviderConfig {
  ProviderKind kind = ProviderKind::stub;
  std::string endpoint;
  std::string credentials_env;
  std::map<std::string, std::string> models;
  std::string embedding_model;
  std::size_t concurrency = 4;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;

  static ProviderConfig parse(std::string_view json_text);
  static ProviderConfig load(const std::filesystem::path& path);
  /// $PILOT_PROVIDER_CONFIG when set, else ./pilot_provider.json.
  static std::filesystem::path default_path();
  /// Provider-side id for a logical model id (identity when unmapped).
  std::string resolve_model(const std::string& model_id) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Outcome of one request inside a batch: either a result or the error
/// message that ended its retries.
struct GenerationOutcome {
  std::optional<GenerationResult> result;
  std::string error;
};

/// Uniform front door to a provider: model-id mapping, retry with
/// exponential backoff, bounded concurrency, profile elicitation, and
/// embedding validation.
class Gateway {
 public:
  Gateway(std::shared_ptr<TextProvider> text, std::shared_ptr<EmbeddingProvider> embeddings,
          ProviderConfig config, Sleeper sleeper = {});

  const ProviderConfig& config() const noexcept { return config_; }

  /// Throws Error(provider) after the final failed attempt, or at once on a
  /// hard failure; "empty generation" when the provider returns no text.
  GenerationResult generate(const GenerationRequest& request) const;

  /// Runs up to `config().concurrency` requests at a time. Outcomes are in
  /// request order; failures are reported per slot, never thrown.
  std::vector<GenerationOutcome> generate_all(std::span<const GenerationRequest> requests) const;

  /// Sends the analyzer prompt, strips a fence that wraps the whole reply,
  /// and validates the result as a complete profile (source = elicited).
  PilotProfile elicit_profile(std::span<const std::string> persona_texts, const std::string& analyzer_model,
                              std::string persona_id, std::optional<std::uint64_t> seed = std::nullopt) const;

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts, const std::string& embed_model) const;

 private:
  std::shared_ptr<TextProvider> text_;
  std::shared_ptr<EmbeddingProvider> embeddings_;
  ProviderConfig config_;
  Sleeper sleeper_;
};

/// Returns the document inside a ``` fence when the fence wraps the entire
/// payload; otherwise the trimmed payload, which must then start with '{'
/// (Error(parse) "non-document prefix").
std::string strip_code_fence(std::string_view payload);

/// Deterministic offline provider. Output is a pure function of (model id,
/// prompt, seed). Model ids stub-a, stub-b and stub-c have distinct length
/// and vocabulary settings; other ids get settings derived from a hash.
class StubProvider final : public TextProvider, public EmbeddingProvider {
 public:
  static constexpr std::size_t kEmbeddingDim = 64;

  ProviderReply complete(const GenerationRequest& request) override;
  std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts,
                                               const std::string& model_id) override;
};

/// JSON-over-HTTP adapter.
///   POST <endpoint>/v1/generate {"model_id","prompt","parameters":{...}} -> {"text": "..."}
///   POST <endpoint>/v1/embed    {"model_id","texts":[...]}               -> {"vectors": [[...], ...]}
/// 429 and 5xx map to transient replies, other non-2xx to failures.
class HttpProvider final : public TextProvider, public EmbeddingProvider {
 public:
  explicit HttpProvider(ProviderConfig config);
  ~HttpProvider() override;

  ProviderReply complete(const GenerationRequest& request) override;
  std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts,
                                               const std::string& model_id) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::unique_ptr<Gateway> make_gateway(const ProviderConfig& config, Sleeper sleeper = {});

}  // namespace pilot
