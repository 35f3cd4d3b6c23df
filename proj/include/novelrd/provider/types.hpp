#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace novelrd::provider {

/// Task description handed to deterministic backends alongside the prompt.
/// Never sent over the wire and never part of the cache key.
using TaskHint = std::map<std::string, std::string>;

struct GenerationRequest {
  std::string prompt;
  std::int64_t max_output_units = 8192;
  double temperature = 0.3;
  std::string model_id;
  TaskHint hint;
};

struct GenerationResponse {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t provider_latency_ms = 0;

  bool operator==(const GenerationResponse&) const = default;
};

struct EmbeddingResponse {
  std::vector<std::vector<double>> vectors;
  int dimension = 0;
};

struct ProviderConfig {
  std::string endpoint;           ///< generation URL
  std::string embed_endpoint;     ///< embedding URL; empty disables remote embeddings
  std::string wire_format = "canonical";  ///< "canonical" or "openai-chat"
  std::string model_id = "mock";
  std::string embed_model_id;     ///< defaults to model_id
  std::string api_key_env = "NOVELRD_API_KEY";
  std::int64_t tpm_limit = 1'000'000;
  int max_concurrent = 4;
  int max_retries = 4;            ///< retries after the first attempt
  std::int64_t backoff_base_ms = 1000;
  std::int64_t timeout_ms = 300'000;
  double temperature = 0.3;

  void validate() const;
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProviderConfig& c);

/// Content address of a generation request.
struct CacheKey {
  std::string hex;

  bool operator==(const CacheKey&) const = default;
  auto operator<=>(const CacheKey&) const = default;
};

CacheKey cache_key(const GenerationRequest& req);
CacheKey embedding_cache_key(const std::string& model_id, const std::string& text);

/// Canonical JSON (sorted keys, compact) of a response.
std::string canonical_json(const GenerationResponse& r);
GenerationResponse response_from_json(const nlohmann::json& j);

/// Token estimate when the provider omits usage: ceil(cjk/2) + ceil(other/0.75).
std::int64_t estimate_tokens(const std::string& text);
/// Output token budget for a unit budget (conservative Latin ratio).
std::int64_t output_token_budget(std::int64_t units);

}  // namespace novelrd::provider
