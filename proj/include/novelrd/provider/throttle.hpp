#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>

namespace novelrd::provider {

using Millis = std::chrono::milliseconds;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Millis now() const = 0;
  virtual void sleep_for(Millis d) = 0;
};

class SteadyClock final : public Clock {
 public:
  Millis now() const override;
  void sleep_for(Millis d) override;
};

/// Manual clock for tests: sleeping advances time instantly.
class SimulatedClock final : public Clock {
 public:
  Millis now() const override { return Millis(now_ms_.load()); }
  void sleep_for(Millis d) override {
    now_ms_ += d.count();
    slept_ms_ += d.count();
  }
  void advance(Millis d) { now_ms_ += d.count(); }
  std::int64_t total_slept_ms() const { return slept_ms_.load(); }

 private:
  std::atomic<std::int64_t> now_ms_{0};
  std::atomic<std::int64_t> slept_ms_{0};
};

/// Tokens-per-minute limiter over a sliding 60 s window: a dispatch of `t`
/// tokens is admitted only when the tokens dispatched in the trailing window
/// plus `t` stay within the limit.
class TpmLimiter {
 public:
  struct Dispatch {
    Millis at;
    std::int64_t tokens;
  };

  TpmLimiter(std::int64_t tpm_limit, std::shared_ptr<Clock> clock, Millis window = Millis(60'000));

  /// Blocks until `tokens` fit. Throws ConfigError if tokens > limit.
  void acquire(std::int64_t tokens);

  std::int64_t limit() const noexcept { return limit_; }
  /// Snapshot of every dispatch so far (for compliance checks).
  std::deque<Dispatch> history() const;

 private:
  std::int64_t limit_;
  std::shared_ptr<Clock> clock_;
  Millis window_;
  mutable std::mutex mu_;
  std::deque<Dispatch> window_log_;
  std::deque<Dispatch> history_;
  std::int64_t in_window_ = 0;
};

/// Counting gate bounding the number of in-flight requests.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int max_in_flight);

  class Ticket {
   public:
    explicit Ticket(ConcurrencyGate& g) : gate_(&g) { gate_->enter(); }
    Ticket(const Ticket&) = delete;
    Ticket& operator=(const Ticket&) = delete;
    ~Ticket() { gate_->leave(); }

   private:
    ConcurrencyGate* gate_;
  };

  int peak() const noexcept { return peak_.load(); }
  int max_in_flight() const noexcept { return max_; }

 private:
  void enter();
  void leave();

  int max_;
  int in_flight_ = 0;
  std::atomic<int> peak_{0};
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace novelrd::provider
