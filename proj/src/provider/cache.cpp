#include "novelrd/provider/cache.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "novelrd/error.hpp"

namespace novelrd::provider {

namespace fs = std::filesystem;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw ConfigError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

fs::path ResponseCache::path_for(const CacheKey& key) const { return dir_ / (key.hex + ".json"); }

bool ResponseCache::contains(const CacheKey& key) const { return fs::exists(path_for(key)); }

std::optional<std::string> ResponseCache::get(const CacheKey& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ResponseCache::put(const CacheKey& key, const std::string& content) const {
  static std::atomic<std::uint64_t> counter{0};
  const fs::path final_path = path_for(key);
  std::ostringstream tmp_name;
  tmp_name << key.hex << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "."
           << counter++;
  const fs::path tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write cache file " + tmp.string());
    out << content;
  }
  fs::rename(tmp, final_path);
}

}  // namespace novelrd::provider
