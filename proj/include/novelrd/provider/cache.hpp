#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "novelrd/provider/types.hpp"

namespace novelrd::provider {

/// Content-addressed response store: one file per key, named by the lowercase
/// hex hash, holding canonical JSON. Writes are atomic (temp file + rename).
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const CacheKey& key) const;
  void put(const CacheKey& key, const std::string& content) const;
  bool contains(const CacheKey& key) const;
  std::filesystem::path path_for(const CacheKey& key) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace novelrd::provider
