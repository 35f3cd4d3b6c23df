#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "novelrd/units.hpp"

namespace novelrd::pipeline {

/// JSON keys of the structured chapter outline, matched byte for byte.
namespace detail_keys {
inline constexpr std::string_view kPlotSummary = "情节摘要导语";
inline constexpr std::string_view kCharacters = "出现人物";
inline constexpr std::string_view kProps = "出现道具";
inline constexpr std::string_view kScenes = "出现场景";
inline constexpr std::string_view kForeshadowSet = "伏笔_设下";
inline constexpr std::string_view kForeshadowResolved = "伏笔_回收";
}  // namespace detail_keys

struct ChapterDetail {
  std::string plot_summary;
  std::vector<std::string> characters;
  std::vector<std::string> props;
  std::vector<std::string> scenes;
  std::vector<std::string> foreshadow_set;
  std::vector<std::string> foreshadow_resolved;

  bool operator==(const ChapterDetail&) const = default;
};

struct DetailParse {
  ChapterDetail detail;
  nlohmann::json extras = nlohmann::json::object();  ///< unknown keys, kept verbatim
  std::vector<std::string> warnings;
  bool fences_stripped = false;
};

/// Strict parse of a provider payload. Markdown code fences around the JSON
/// are stripped first. All six keys must be present; a list key may be null
/// (read as empty) but not absent. Lists are deduplicated in order.
/// Throws SchemaError naming the missing or malformed key.
DetailParse validate_chapter_detail(std::string_view payload);

/// Remove one surrounding ``` / ```json fence. Returns the input trimmed when
/// no fence is present.
std::string strip_code_fences(std::string_view payload, bool* stripped = nullptr);

nlohmann::json to_json(const ChapterDetail& d);
ChapterDetail detail_from_json(const nlohmann::json& j);

/// One-line rendering used as a chapter body inside outlines.
std::string render_detail(const ChapterDetail& d);

/// Units of content: plot summary plus every list item.
std::int64_t detail_units(const ChapterDetail& d, UnitMode mode = UnitMode::Mixed);

}  // namespace novelrd::pipeline
