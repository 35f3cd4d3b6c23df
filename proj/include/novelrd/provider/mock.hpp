#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "novelrd/provider/backend.hpp"
#include "novelrd/units.hpp"

namespace novelrd::provider {

/// First ceil(alpha * count_units(text)) units of text. alpha in (0, 1].
std::string mock_compress(std::string_view text, double alpha, UnitMode mode = UnitMode::Mixed);

/// Pads `outline` with deterministic filler units up to exactly `target_units`.
/// The outline's units survive in order as a subsequence; target == length
/// returns the outline unchanged.
std::string mock_expand(std::string_view outline, std::int64_t target_units, std::uint64_t seed,
                        UnitMode mode = UnitMode::Mixed);

/// Unit-norm bag-of-units embedding: the normalized sum of one
/// content-hash-seeded pseudorandom vector per unit.
std::vector<double> mock_embedding(std::string_view text, int dimension);

/// Entity lists the mock judge extracts: characters are units starting with
/// an uppercase ASCII letter, props start with '#', scenes with '@'.
struct MockEntities {
  std::vector<std::string> characters;
  std::vector<std::string> props;
  std::vector<std::string> scenes;
};
MockEntities mock_entities(std::string_view text);

/// The mock judge's JSON answer for a pair of texts (identical texts score 1.0).
std::string mock_judge_payload(std::string_view text_a, std::string_view text_b);

struct MockOptions {
  UnitMode unit_mode = UnitMode::Mixed;
  int embedding_dim = 64;
  /// Any prompt containing one of these substrings fails with a
  /// non-retryable ProviderError.
  std::vector<std::string> fail_if_prompt_contains;
};

/// Deterministic, network-free backend driven by TaskHint entries.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockOptions options = {});

  GenerationResponse generate(const GenerationRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_id) override;

  std::int64_t generate_calls() const noexcept { return generate_calls_.load(); }
  std::int64_t embed_calls() const noexcept { return embed_calls_.load(); }

 private:
  std::string respond(const GenerationRequest& req) const;

  MockOptions options_;
  std::atomic<std::int64_t> generate_calls_{0};
  std::atomic<std::int64_t> embed_calls_{0};
};

}  // namespace novelrd::provider
