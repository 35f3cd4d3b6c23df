#include "novelrd/provider/http_backend.hpp"

#include <chrono>
#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace novelrd::provider {

using nlohmann::json;

namespace {

std::int64_t usage_or_estimate(const json& usage, const char* key, const std::string& text) {
  if (usage.is_object() && usage.contains(key) && usage.at(key).is_number_integer()) {
    return usage.at(key).get<std::int64_t>();
  }
  return estimate_tokens(text);
}

}  // namespace

json CanonicalAdapter::encode(const GenerationRequest& req) const {
  return json{{"model", req.model_id},
              {"prompt", req.prompt},
              {"temperature", req.temperature},
              {"max_tokens", output_token_budget(req.max_output_units)}};
}

GenerationResponse CanonicalAdapter::decode(const json& body, const GenerationRequest& req) const {
  if (!body.is_object() || !body.contains("text") || !body.at("text").is_string()) {
    throw ProviderError(200, "response lacks a \"text\" string: " + body.dump().substr(0, 200));
  }
  GenerationResponse r;
  r.text = body.at("text").get<std::string>();
  const json usage = body.value("usage", json::object());
  r.input_tokens = usage_or_estimate(usage, "input_tokens", req.prompt);
  r.output_tokens = usage_or_estimate(usage, "output_tokens", r.text);
  return r;
}

json OpenAIChatAdapter::encode(const GenerationRequest& req) const {
  return json{{"model", req.model_id},
              {"messages", json::array({json{{"role", "user"}, {"content", req.prompt}}})},
              {"temperature", req.temperature},
              {"max_tokens", output_token_budget(req.max_output_units)}};
}

GenerationResponse OpenAIChatAdapter::decode(const json& body, const GenerationRequest& req) const {
  try {
    GenerationResponse r;
    r.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
    const json usage = body.value("usage", json::object());
    r.input_tokens = usage_or_estimate(usage, "prompt_tokens", req.prompt);
    r.output_tokens = usage_or_estimate(usage, "completion_tokens", r.text);
    return r;
  } catch (const json::exception& e) {
    throw ProviderError(200, std::string("unexpected chat completion body: ") + e.what());
  }
}

std::unique_ptr<WireAdapter> make_adapter(const std::string& wire_format) {
  if (wire_format == "canonical") return std::make_unique<CanonicalAdapter>();
  if (wire_format == "openai-chat") return std::make_unique<OpenAIChatAdapter>();
  throw ConfigError("unknown wire format '" + wire_format + "'");
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

HttpBackend::HttpBackend(const ProviderConfig& config)
    : config_(config), adapter_(make_adapter(config.wire_format)) {
  if (config_.endpoint.empty()) throw ConfigError("provider endpoint is not set");
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("API key environment variable " + config_.api_key_env + " is not set");
  }
  api_key_ = key;
}

json HttpBackend::post(const std::string& url, const json& body) const {
  const auto [base, path] = split_url(url);
  httplib::Client client(base);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransientError(0, "HTTP request to " + url + " failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 429 || status >= 500) {
    throw TransientError(status, "HTTP " + std::to_string(status) + " from " + url);
  }
  if (status < 200 || status >= 300) {
    throw ProviderError(status, "HTTP " + std::to_string(status) + " from " + url + ": " +
                                    res->body.substr(0, 200));
  }
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw ProviderError(status, "response body is not JSON: " + res->body.substr(0, 200));
  }
}

GenerationResponse HttpBackend::generate(const GenerationRequest& req) {
  const auto started = std::chrono::steady_clock::now();
  GenerationResponse r = adapter_->decode(post(config_.endpoint, adapter_->encode(req)), req);
  r.provider_latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
  return r;
}

std::vector<std::vector<double>> HttpBackend::embed(const std::vector<std::string>& texts,
                                                    const std::string& model_id) {
  if (config_.embed_endpoint.empty()) throw ConfigError("provider embed_endpoint is not set");
  const json body = post(config_.embed_endpoint, json{{"model", model_id}, {"input", texts}});
  try {
    return body.at("embeddings").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ProviderError(200, std::string("unexpected embedding body: ") + e.what());
  }
}

}  // namespace novelrd::provider
