#include "novelrd/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace novelrd {

Digest sha256(std::string_view bytes) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  const Digest d = sha256(bytes);
  std::string hex;
  hex.reserve(64);
  for (std::uint8_t b : d) {
    hex.push_back(kHex[b >> 4]);
    hex.push_back(kHex[b & 0x0F]);
  }
  return hex;
}

std::uint64_t hash64(std::string_view bytes) {
  const Digest d = sha256(bytes);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  std::uint64_t state = seed ^ hash64(stream);
  return splitmix64(state);
}

}  // namespace novelrd
