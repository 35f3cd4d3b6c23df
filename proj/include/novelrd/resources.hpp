#pragma once

#include <map>
#include <string>
#include <string_view>

namespace novelrd::resources {

/// Build-time copies of templates/ and data/, keyed by repo-relative path
/// (e.g. "templates/zh/judge.txt", "data/grid.json").
const std::map<std::string, std::string_view>& all();

/// Throws ConfigError for an unknown name.
std::string_view get(std::string_view name);

}  // namespace novelrd::resources
