#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pilot/error.hpp"
#include "pilot/provider_gateway.hpp"

namespace pilot {
namespace {

using json = nlohmann::json;

ReplyStatus classify(int status) {
  if (status >= 200 && status < 300) return ReplyStatus::ok;
  if (status == 408 || status == 429 || status >= 500) return ReplyStatus::transient;
  return ReplyStatus::failed;
}

}  // namespace

struct HttpProvider::Impl {
  ProviderConfig config;
  httplib::Headers headers;

  std::unique_ptr<httplib::Client> client() const {
    auto cli = std::make_unique<httplib::Client>(config.endpoint);
    const auto secs = static_cast<time_t>(config.timeout.count());
    cli->set_connection_timeout(secs, 0);
    cli->set_read_timeout(secs, 0);
    cli->set_write_timeout(secs, 0);
    cli->set_default_headers(headers);
    return cli;
  }
};

HttpProvider::HttpProvider(ProviderConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  if (impl_->config.endpoint.empty()) throw Error(ErrorKind::validation, "http provider: empty endpoint");
  if (!impl_->config.credentials_env.empty()) {
    const char* secret = std::getenv(impl_->config.credentials_env.c_str());
    if (secret == nullptr || *secret == '\0') {
      throw Error(ErrorKind::validation,
                  "http provider: environment variable " + impl_->config.credentials_env + " is not set");
    }
    impl_->headers.emplace("Authorization", std::string("Bearer ") + secret);
  }
}

HttpProvider::~HttpProvider() = default;

ProviderReply HttpProvider::complete(const GenerationRequest& request) {
  json body = {{"model_id", request.model_id},
               {"prompt", request.prompt},
               {"parameters",
                {{"max_output_chars", request.max_output_chars}, {"temperature", request.temperature}}}};
  if (request.seed) body["parameters"]["seed"] = *request.seed;

  auto res = impl_->client()->Post("/v1/generate", body.dump(), "application/json");
  if (!res) return {ReplyStatus::transient, {}, "network failure: " + httplib::to_string(res.error())};
  const ReplyStatus status = classify(res->status);
  if (status != ReplyStatus::ok) {
    return {status, {}, "HTTP " + std::to_string(res->status) + (res->body.empty() ? "" : ": " + res->body)};
  }
  try {
    const json reply = json::parse(res->body);
    return {ReplyStatus::ok, reply.at("text").get<std::string>(), {}};
  } catch (const json::exception& e) {
    return {ReplyStatus::failed, {}, std::string("malformed provider reply: ") + e.what()};
  }
}

std::vector<std::vector<double>> HttpProvider::embed_batch(std::span<const std::string> texts,
                                                           const std::string& model_id) {
  json body = {{"model_id", model_id}, {"texts", json::array()}};
  for (const auto& t : texts) body["texts"].push_back(t);
  auto res = impl_->client()->Post("/v1/embed", body.dump(), "application/json");
  if (!res) throw Error(ErrorKind::provider, "network failure: " + httplib::to_string(res.error()));
  if (classify(res->status) != ReplyStatus::ok) {
    throw Error(ErrorKind::provider, "HTTP " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body).at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::provider, std::string("malformed embedding reply: ") + e.what());
  }
}

}  // namespace pilot
