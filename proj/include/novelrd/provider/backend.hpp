#pragma once

#include <string>
#include <vector>

#include "novelrd/error.hpp"
#include "novelrd/provider/types.hpp"

namespace novelrd::provider {

/// Retryable failure: HTTP 429 / 5xx, timeouts, dropped connections.
/// status == 0 means no HTTP status was received.
class TransientError : public Error {
 public:
  TransientError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Non-retryable provider failure (4xx other than 429, malformed body).
class ProviderError : public Error {
 public:
  ProviderError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

struct Attempt {
  int number = 0;             ///< 1-based
  int status = 0;             ///< HTTP status, 0 if none, 200 on success
  std::string error;          ///< empty on success
  std::int64_t backoff_ms = 0;  ///< wait before the next attempt (0 on the last)
};

/// Retries exhausted. Carries the full attempt log.
class TransportError : public Error {
 public:
  TransportError(std::vector<Attempt> attempts, const std::string& what)
      : Error(what), attempts_(std::move(attempts)) {}
  const std::vector<Attempt>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<Attempt> attempts_;
};

/// One generation/embedding service. Implementations throw TransientError or
/// ProviderError; retries, caching and throttling live in ProviderClient.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResponse generate(const GenerationRequest& req) = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                                 const std::string& model_id) = 0;
};

}  // namespace novelrd::provider
