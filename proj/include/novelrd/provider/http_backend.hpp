#pragma once

#include <memory>
#include <string>

#include "novelrd/provider/backend.hpp"

namespace novelrd::provider {

/// Maps the canonical request/response shape onto a vendor wire format.
class WireAdapter {
 public:
  virtual ~WireAdapter() = default;
  virtual nlohmann::json encode(const GenerationRequest& req) const = 0;
  /// Throws ProviderError on a body it cannot interpret.
  virtual GenerationResponse decode(const nlohmann::json& body, const GenerationRequest& req) const = 0;
};

/// {"model","prompt","temperature","max_tokens"} -> {"text","usage":{...}}
class CanonicalAdapter final : public WireAdapter {
 public:
  nlohmann::json encode(const GenerationRequest& req) const override;
  GenerationResponse decode(const nlohmann::json& body, const GenerationRequest& req) const override;
};

/// OpenAI-style chat completions.
class OpenAIChatAdapter final : public WireAdapter {
 public:
  nlohmann::json encode(const GenerationRequest& req) const override;
  GenerationResponse decode(const nlohmann::json& body, const GenerationRequest& req) const override;
};

std::unique_ptr<WireAdapter> make_adapter(const std::string& wire_format);

/// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

/// HTTP backend speaking JSON over POST. Embeddings use
/// {"model","input":[...]} -> {"embeddings":[[...]]} at embed_endpoint.
class HttpBackend final : public Backend {
 public:
  /// Reads the API key from config.api_key_env; a missing key is a ConfigError.
  explicit HttpBackend(const ProviderConfig& config);

  GenerationResponse generate(const GenerationRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_id) override;

 private:
  nlohmann::json post(const std::string& url, const nlohmann::json& body) const;

  ProviderConfig config_;
  std::string api_key_;
  std::unique_ptr<WireAdapter> adapter_;
};

}  // namespace novelrd::provider
