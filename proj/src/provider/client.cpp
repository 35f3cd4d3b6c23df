#include "novelrd/provider/client.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace novelrd::provider {

using nlohmann::json;

ProviderClient::ProviderClient(ProviderConfig config, std::shared_ptr<Backend> backend,
                               std::optional<ResponseCache> cache, std::shared_ptr<Clock> clock,
                               std::uint64_t jitter_seed)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      cache_(std::move(cache)),
      clock_(std::move(clock)),
      limiter_(config_.tpm_limit, clock_),
      gate_(config_.max_concurrent),
      rng_(jitter_seed) {
  config_.validate();
  if (!backend_) throw ConfigError("provider client needs a backend");
}

std::shared_ptr<std::mutex> ProviderClient::key_lock(const std::string& key) {
  std::lock_guard lock(locks_mu_);
  auto& slot = key_locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

std::int64_t ProviderClient::jitter(std::int64_t cap_ms) {
  std::lock_guard lock(rng_mu_);
  const std::uint64_t span = static_cast<std::uint64_t>(cap_ms) + 1;
  return static_cast<std::int64_t>(rng_() % span);
}

template <typename Call>
auto ProviderClient::with_retries(std::int64_t tokens, std::vector<Attempt>& log, Call&& call) {
  const int max_attempts = config_.max_retries + 1;
  for (int n = 1;; ++n) {
    limiter_.acquire(tokens);
    Attempt attempt;
    attempt.number = n;
    try {
      ConcurrencyGate::Ticket ticket(gate_);
      ++provider_calls_;
      auto result = call();
      attempt.status = 200;
      log.push_back(attempt);
      return result;
    } catch (const TransientError& e) {
      attempt.status = e.status();
      attempt.error = e.what();
      if (n >= max_attempts) {
        log.push_back(attempt);
        throw TransportError(log, "provider failed after " + std::to_string(n) +
                                      " attempts: " + e.what());
      }
      const double cap = static_cast<double>(config_.backoff_base_ms) * std::ldexp(1.0, n - 1);
      attempt.backoff_ms = jitter(static_cast<std::int64_t>(std::min(cap, 3.6e6)));
      log.push_back(attempt);
      clock_->sleep_for(Millis(attempt.backoff_ms));
    } catch (const ProviderError& e) {
      attempt.status = e.status();
      attempt.error = e.what();
      log.push_back(attempt);
      throw;
    }
  }
}

CallOutcome ProviderClient::generate_logged(const GenerationRequest& in) {
  if (in.prompt.empty()) throw ProviderError(0, "generation request has an empty prompt");
  if (in.max_output_units < 1) throw ProviderError(0, "max_output_units must be positive");
  if (in.temperature < 0.0 || in.temperature > 2.0) {
    throw ProviderError(0, "temperature must lie in [0, 2]");
  }
  GenerationRequest req = in;
  if (req.model_id.empty()) req.model_id = config_.model_id;

  CallOutcome out;
  out.key = cache_key(req);
  std::shared_ptr<std::mutex> guard;
  std::unique_lock<std::mutex> held;
  if (cache_) {
    guard = key_lock(out.key.hex);
    held = std::unique_lock(*guard);
    if (auto hit = cache_->get(out.key)) {
      out.response = response_from_json(json::parse(*hit));
      out.cache_hit = true;
      ++cache_hits_;
      return out;
    }
  }

  const std::int64_t tokens =
      estimate_tokens(req.prompt) + output_token_budget(req.max_output_units);
  out.response = with_retries(std::min(tokens, limiter_.limit()), out.attempts,
                              [&] { return backend_->generate(req); });
  input_tokens_ += out.response.input_tokens;
  output_tokens_ += out.response.output_tokens;
  if (cache_) cache_->put(out.key, canonical_json(out.response));
  return out;
}

GenerationResponse ProviderClient::generate(const GenerationRequest& req) {
  return generate_logged(req).response;
}

EmbeddingResponse ProviderClient::embed(std::span<const std::string> texts) {
  if (texts.empty()) throw ProviderError(0, "embed: no texts given");
  for (const auto& t : texts) {
    if (t.empty()) throw ProviderError(0, "embed: empty text rejected");
  }
  const std::string model = config_.embed_model_id.empty() ? config_.model_id : config_.embed_model_id;

  std::map<std::string, std::vector<double>> resolved;
  std::vector<std::string> missing;
  std::set<std::string> queued;
  for (const auto& t : texts) {
    if (resolved.count(t) || queued.count(t)) continue;
    if (cache_) {
      if (auto hit = cache_->get(embedding_cache_key(model, t))) {
        resolved[t] = json::parse(*hit).get<std::vector<double>>();
        ++cache_hits_;
        continue;
      }
    }
    missing.push_back(t);
    queued.insert(t);
  }

  constexpr std::size_t kBatch = 256;
  for (std::size_t start = 0; start < missing.size(); start += kBatch) {
    const std::vector<std::string> batch(
        missing.begin() + static_cast<std::ptrdiff_t>(start),
        missing.begin() + static_cast<std::ptrdiff_t>(std::min(missing.size(), start + kBatch)));
    std::int64_t tokens = 0;
    for (const auto& t : batch) tokens += estimate_tokens(t);
    std::vector<Attempt> log;
    auto vectors = with_retries(std::min(tokens, limiter_.limit()), log,
                                [&] { return backend_->embed(batch, model); });
    if (vectors.size() != batch.size()) {
      throw ProviderError(0, "embed: provider returned " + std::to_string(vectors.size()) +
                                 " vectors for " + std::to_string(batch.size()) + " texts");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (cache_) cache_->put(embedding_cache_key(model, batch[i]), json(vectors[i]).dump());
      resolved[batch[i]] = std::move(vectors[i]);
    }
  }

  EmbeddingResponse out;
  out.vectors.reserve(texts.size());
  for (const auto& t : texts) {
    const auto& v = resolved.at(t);
    if (v.empty()) throw ProviderError(0, "embed: zero-dimensional vector");
    if (out.dimension == 0) out.dimension = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != out.dimension) {
      throw ProviderError(0, "embed: inconsistent vector dimensions");
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw ProviderError(0, "embed: non-finite component");
    }
    out.vectors.push_back(v);
  }
  return out;
}

ClientStats ProviderClient::stats() const {
  return ClientStats{provider_calls_.load(), cache_hits_.load(), input_tokens_.load(),
                     output_tokens_.load()};
}

}  // namespace novelrd::provider
