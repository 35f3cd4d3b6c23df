#pragma once

// Vocabulary of TaskHint entries written by the pipeline and metrics modules
// and read by deterministic backends.

#include <string_view>

namespace novelrd::provider::task {

inline constexpr std::string_view kKind = "task";

inline constexpr std::string_view kCompressDirect = "compress_direct";
inline constexpr std::string_view kCompressChapter = "compress_chapter";
inline constexpr std::string_view kExtractDetail = "extract_detail";
inline constexpr std::string_view kCompressOutline = "compress_outline";
inline constexpr std::string_view kExpandDetail = "expand_detail";
inline constexpr std::string_view kExpand = "expand";
inline constexpr std::string_view kJudge = "judge";

inline constexpr std::string_view kSource = "source";
inline constexpr std::string_view kTargetUnits = "target_units";
inline constexpr std::string_view kAlpha = "alpha";
inline constexpr std::string_view kChapter = "chapter";
inline constexpr std::string_view kOutline = "outline";
inline constexpr std::string_view kFocusBegin = "focus_begin";  ///< unit index into kOutline
inline constexpr std::string_view kFocusEnd = "focus_end";
inline constexpr std::string_view kMinUnits = "min_units";
inline constexpr std::string_view kSeed = "seed";
inline constexpr std::string_view kUnitMode = "unit_mode";
inline constexpr std::string_view kTextA = "text_a";
inline constexpr std::string_view kTextB = "text_b";
inline constexpr std::string_view kWantLastTitle = "want_last_title";

}  // namespace novelrd::provider::task
