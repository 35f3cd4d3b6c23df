#pragma once

// Text units: the word-count measure every length in the pipeline is
// expressed in. CJK ideographs (and CJK punctuation / fullwidth forms) count
// one unit each; runs of other non-whitespace characters count one unit.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace novelrd {

enum class UnitMode {
  Whitespace,  ///< maximal non-whitespace runs
  CJKChar,     ///< CJK codepoints only; everything else is ignored
  Mixed,       ///< CJK codepoint = 1 unit, maximal non-CJK non-space run = 1 unit
};

UnitMode parse_unit_mode(std::string_view name);
std::string_view to_string(UnitMode mode);

/// Byte range [begin, end) of one unit inside its text.
struct UnitSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

bool is_cjk_codepoint(char32_t cp) noexcept;
bool is_space_codepoint(char32_t cp) noexcept;

std::vector<UnitSpan> segment_units(std::string_view text, UnitMode mode = UnitMode::Mixed);
std::int64_t count_units(std::string_view text, UnitMode mode = UnitMode::Mixed);

/// Unit counts split by script, used for token estimation.
struct ScriptCounts {
  std::int64_t cjk = 0;
  std::int64_t other = 0;
};
ScriptCounts count_by_script(std::string_view text);

/// Unit strings, in order.
std::vector<std::string> unit_strings(std::string_view text, UnitMode mode = UnitMode::Mixed);

/// Prefix of `text` holding its first `n` units, ending right after unit n.
std::string take_units(std::string_view text, std::int64_t n, UnitMode mode = UnitMode::Mixed);

/// Substring covering units [first, last), from the start of unit `first` to
/// the start of unit `last` (or the end of text). first == 0 starts at byte 0.
std::string unit_slice(std::string_view text, std::int64_t first, std::int64_t last,
                       UnitMode mode = UnitMode::Mixed);

/// Strip a UTF-8 BOM and convert CRLF / lone CR to LF. Nothing else changes.
std::string normalize_text(std::string_view raw);

/// One "第N章：body" section of an outline.
struct ChapterSection {
  int chapter = 0;
  std::string body;
};

/// Split an outline into chapter sections at lines that start with a
/// "第N章：" (or "Chapter N:") marker. Text before the first marker is dropped.
std::vector<ChapterSection> parse_chapter_sections(std::string_view outline);
std::string render_chapter_sections(const std::vector<ChapterSection>& sections);

}  // namespace novelrd
