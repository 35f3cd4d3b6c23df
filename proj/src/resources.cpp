#include "novelrd/resources.hpp"

#include "novelrd/error.hpp"

namespace novelrd::resources {

std::string_view get(std::string_view name) {
  const auto& table = all();
  const auto it = table.find(std::string(name));
  if (it == table.end()) throw ConfigError("unknown embedded resource '" + std::string(name) + "'");
  return it->second;
}

}  // namespace novelrd::resources
