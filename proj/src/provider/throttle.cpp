#include "novelrd/provider/throttle.hpp"

#include <thread>

#include "novelrd/error.hpp"

namespace novelrd::provider {

Millis SteadyClock::now() const {
  return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now().time_since_epoch());
}

void SteadyClock::sleep_for(Millis d) { std::this_thread::sleep_for(d); }

TpmLimiter::TpmLimiter(std::int64_t tpm_limit, std::shared_ptr<Clock> clock, Millis window)
    : limit_(tpm_limit), clock_(std::move(clock)), window_(window) {
  if (limit_ <= 0) throw ConfigError("tpm_limit must be positive");
}

void TpmLimiter::acquire(std::int64_t tokens) {
  if (tokens > limit_) {
    throw ConfigError("request of " + std::to_string(tokens) + " tokens exceeds tpm_limit " +
                      std::to_string(limit_));
  }
  std::unique_lock lock(mu_);
  for (;;) {
    const Millis now = clock_->now();
    while (!window_log_.empty() && window_log_.front().at + window_ <= now) {
      in_window_ -= window_log_.front().tokens;
      window_log_.pop_front();
    }
    if (in_window_ + tokens <= limit_) {
      window_log_.push_back({now, tokens});
      history_.push_back({now, tokens});
      in_window_ += tokens;
      return;
    }
    // Wait until enough of the oldest dispatches leave the window.
    std::int64_t freed = 0;
    Millis until = now;
    for (const auto& d : window_log_) {
      freed += d.tokens;
      until = d.at + window_;
      if (in_window_ - freed + tokens <= limit_) break;
    }
    lock.unlock();
    clock_->sleep_for(std::max(Millis(1), until - now));
    lock.lock();
  }
}

std::deque<TpmLimiter::Dispatch> TpmLimiter::history() const {
  std::lock_guard lock(mu_);
  return history_;
}

ConcurrencyGate::ConcurrencyGate(int max_in_flight) : max_(max_in_flight) {
  if (max_ < 1) throw ConfigError("max_concurrent must be >= 1");
}

void ConcurrencyGate::enter() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < max_; });
  ++in_flight_;
  int seen = peak_.load();
  while (in_flight_ > seen && !peak_.compare_exchange_weak(seen, in_flight_)) {
  }
}

void ConcurrencyGate::leave() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

}  // namespace novelrd::provider
