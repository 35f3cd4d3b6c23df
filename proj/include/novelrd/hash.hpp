#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace novelrd {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view bytes);
/// First 8 bytes of the SHA-256, big-endian. Used to seed generators from content.
std::uint64_t hash64(std::string_view bytes);

/// SplitMix64 step; advances `state` and returns the next output.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derive an independent seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

}  // namespace novelrd
