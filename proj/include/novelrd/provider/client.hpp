#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "novelrd/provider/backend.hpp"
#include "novelrd/provider/cache.hpp"
#include "novelrd/provider/throttle.hpp"
#include "novelrd/provider/types.hpp"

namespace novelrd::provider {

struct CallOutcome {
  GenerationResponse response;
  CacheKey key;
  std::vector<Attempt> attempts;  ///< empty on a cache hit
  bool cache_hit = false;
};

struct ClientStats {
  std::int64_t provider_calls = 0;   ///< backend invocations, including failed attempts
  std::int64_t cache_hits = 0;
  std::int64_t input_tokens = 0;     ///< from provider responses (not cache hits)
  std::int64_t output_tokens = 0;
};

/// Thread-safe front end over a Backend: content-addressed cache, TPM
/// limiting, bounded concurrency and retries with exponential backoff and
/// full jitter.
class ProviderClient {
 public:
  ProviderClient(ProviderConfig config, std::shared_ptr<Backend> backend,
                 std::optional<ResponseCache> cache = std::nullopt,
                 std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>(),
                 std::uint64_t jitter_seed = 0x5eed);

  GenerationResponse generate(const GenerationRequest& req);
  CallOutcome generate_logged(const GenerationRequest& req);

  /// One vector per text, order-preserving. Empty texts are rejected before
  /// any network traffic.
  EmbeddingResponse embed(std::span<const std::string> texts);

  ClientStats stats() const;
  const ProviderConfig& config() const noexcept { return config_; }
  const TpmLimiter& limiter() const noexcept { return limiter_; }
  const ConcurrencyGate& gate() const noexcept { return gate_; }
  const std::optional<ResponseCache>& cache() const noexcept { return cache_; }

 private:
  template <typename Call>
  auto with_retries(std::int64_t tokens, std::vector<Attempt>& log, Call&& call);
  std::shared_ptr<std::mutex> key_lock(const std::string& key);
  std::int64_t jitter(std::int64_t cap_ms);

  ProviderConfig config_;
  std::shared_ptr<Backend> backend_;
  std::optional<ResponseCache> cache_;
  std::shared_ptr<Clock> clock_;
  TpmLimiter limiter_;
  ConcurrencyGate gate_;

  std::mutex rng_mu_;
  std::mt19937_64 rng_;

  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;

  std::atomic<std::int64_t> provider_calls_{0};
  std::atomic<std::int64_t> cache_hits_{0};
  std::atomic<std::int64_t> input_tokens_{0};
  std::atomic<std::int64_t> output_tokens_{0};
};

}  // namespace novelrd::provider
