#include "novelrd/provider/types.hpp"

#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"
#include "novelrd/units.hpp"

namespace novelrd::provider {

using nlohmann::json;

void ProviderConfig::validate() const {
  if (tpm_limit <= 0) throw ConfigError("provider tpm_limit must be positive");
  if (max_concurrent < 1) throw ConfigError("provider max_concurrent must be >= 1");
  if (max_retries < 0) throw ConfigError("provider max_retries must be >= 0");
  if (backoff_base_ms <= 0) throw ConfigError("provider backoff_base_ms must be positive");
  if (temperature < 0.0 || temperature > 2.0) throw ConfigError("temperature must lie in [0, 2]");
  if (wire_format != "canonical" && wire_format != "openai-chat") {
    throw ConfigError("unknown provider wire_format '" + wire_format + "'");
  }
}

ProviderConfig provider_config_from_json(const json& j) {
  ProviderConfig c;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.embed_endpoint = j.value("embed_endpoint", c.embed_endpoint);
  c.wire_format = j.value("wire_format", c.wire_format);
  c.model_id = j.value("model_id", c.model_id);
  c.embed_model_id = j.value("embed_model_id", c.embed_model_id);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.tpm_limit = j.value("tpm_limit", c.tpm_limit);
  c.max_concurrent = j.value("max_concurrent", c.max_concurrent);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.temperature = j.value("temperature", c.temperature);
  c.validate();
  return c;
}

json to_json(const ProviderConfig& c) {
  return json{{"endpoint", c.endpoint},
              {"embed_endpoint", c.embed_endpoint},
              {"wire_format", c.wire_format},
              {"model_id", c.model_id},
              {"embed_model_id", c.embed_model_id},
              {"api_key_env", c.api_key_env},
              {"tpm_limit", c.tpm_limit},
              {"max_concurrent", c.max_concurrent},
              {"max_retries", c.max_retries},
              {"backoff_base_ms", c.backoff_base_ms},
              {"timeout_ms", c.timeout_ms},
              {"temperature", c.temperature}};
}

CacheKey cache_key(const GenerationRequest& req) {
  const json tuple = json::array({req.model_id, req.prompt, req.temperature, req.max_output_units});
  return CacheKey{sha256_hex(tuple.dump())};
}

CacheKey embedding_cache_key(const std::string& model_id, const std::string& text) {
  const json tuple = json::array({"embed", model_id, text});
  return CacheKey{sha256_hex(tuple.dump())};
}

std::string canonical_json(const GenerationResponse& r) {
  const json j{{"text", r.text},
               {"input_tokens", r.input_tokens},
               {"output_tokens", r.output_tokens},
               {"provider_latency_ms", r.provider_latency_ms}};
  return j.dump();
}

GenerationResponse response_from_json(const json& j) {
  GenerationResponse r;
  r.text = j.at("text").get<std::string>();
  r.input_tokens = j.value("input_tokens", std::int64_t{0});
  r.output_tokens = j.value("output_tokens", std::int64_t{0});
  r.provider_latency_ms = j.value("provider_latency_ms", std::int64_t{0});
  return r;
}

std::int64_t estimate_tokens(const std::string& text) {
  const auto c = count_by_script(text);
  return (c.cjk + 1) / 2 + (c.other * 4 + 2) / 3;
}

std::int64_t output_token_budget(std::int64_t units) { return (units * 4 + 2) / 3; }

}  // namespace novelrd::provider
