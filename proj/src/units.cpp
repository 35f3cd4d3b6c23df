#include "novelrd/units.hpp"

#include <algorithm>
#include <cctype>

#include "novelrd/error.hpp"

namespace novelrd {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t len;
};

// Invalid sequences decode byte-by-byte as U+FFFD so every byte belongs to
// exactly one codepoint.
Decoded decode_utf8(std::string_view s, std::size_t i) noexcept {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (i + len > s.size()) return {0xFFFD, 1};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

template <typename Visit>
void for_each_unit(std::string_view text, UnitMode mode, Visit&& visit) {
  std::size_t i = 0;
  std::size_t run_begin = std::string_view::npos;
  auto close_run = [&](std::size_t at) {
    if (run_begin != std::string_view::npos) {
      visit(UnitSpan{run_begin, at}, false);
      run_begin = std::string_view::npos;
    }
  };
  while (i < text.size()) {
    const auto [cp, len] = decode_utf8(text, i);
    if (is_space_codepoint(cp)) {
      close_run(i);
    } else if (mode != UnitMode::Whitespace && is_cjk_codepoint(cp)) {
      close_run(i);
      visit(UnitSpan{i, i + len}, true);
    } else if (mode != UnitMode::CJKChar) {
      if (run_begin == std::string_view::npos) run_begin = i;
    }
    i += len;
  }
  close_run(text.size());
}

}  // namespace

UnitMode parse_unit_mode(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "whitespace") return UnitMode::Whitespace;
  if (lower == "cjkchar" || lower == "cjk") return UnitMode::CJKChar;
  if (lower == "mixed") return UnitMode::Mixed;
  throw ConfigError("unknown unit counting mode '" + std::string(name) + "'");
}

std::string_view to_string(UnitMode mode) {
  switch (mode) {
    case UnitMode::Whitespace: return "whitespace";
    case UnitMode::CJKChar: return "cjkchar";
    case UnitMode::Mixed: return "mixed";
  }
  return "mixed";
}

bool is_cjk_codepoint(char32_t cp) noexcept {
  return (cp >= 0x1100 && cp <= 0x11FF) ||    // Hangul Jamo
         (cp >= 0x2E80 && cp <= 0x2FFF) ||    // radicals, Kangxi, description chars
         (cp >= 0x3001 && cp <= 0x33FF) ||    // CJK punctuation, kana, bopomofo, enclosed
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // Ext A
         (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
         (cp >= 0xA960 && cp <= 0xA97F) ||    //
         (cp >= 0xAC00 && cp <= 0xD7AF) ||    // Hangul syllables
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
         (cp >= 0xFE30 && cp <= 0xFE4F) ||    // compatibility forms
         (cp >= 0xFF01 && cp <= 0xFF9F) ||    // fullwidth / halfwidth forms
         (cp >= 0xFFE0 && cp <= 0xFFEE) ||    //
         (cp >= 0x20000 && cp <= 0x3FFFF);   // Ext B and beyond
}

bool is_space_codepoint(char32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0x200B: case 0xFEFF:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

std::vector<UnitSpan> segment_units(std::string_view text, UnitMode mode) {
  std::vector<UnitSpan> spans;
  for_each_unit(text, mode, [&](UnitSpan s, bool) { spans.push_back(s); });
  return spans;
}

std::int64_t count_units(std::string_view text, UnitMode mode) {
  std::int64_t n = 0;
  for_each_unit(text, mode, [&](UnitSpan, bool) { ++n; });
  return n;
}

ScriptCounts count_by_script(std::string_view text) {
  ScriptCounts c;
  for_each_unit(text, UnitMode::Mixed, [&](UnitSpan, bool cjk) { ++(cjk ? c.cjk : c.other); });
  return c;
}

std::vector<std::string> unit_strings(std::string_view text, UnitMode mode) {
  std::vector<std::string> out;
  for_each_unit(text, mode,
                [&](UnitSpan s, bool) { out.emplace_back(text.substr(s.begin, s.end - s.begin)); });
  return out;
}

std::string take_units(std::string_view text, std::int64_t n, UnitMode mode) {
  if (n <= 0) return {};
  std::size_t end = 0;
  std::int64_t seen = 0;
  for_each_unit(text, mode, [&](UnitSpan s, bool) {
    if (seen < n) end = s.end;
    ++seen;
  });
  if (seen <= n) return std::string(text);
  return std::string(text.substr(0, end));
}

std::string unit_slice(std::string_view text, std::int64_t first, std::int64_t last,
                       UnitMode mode) {
  if (last <= first) return {};
  const auto spans = segment_units(text, mode);
  const auto n = static_cast<std::int64_t>(spans.size());
  first = std::clamp<std::int64_t>(first, 0, n);
  last = std::clamp<std::int64_t>(last, 0, n);
  if (last <= first) return {};
  const std::size_t begin = first == 0 ? 0 : spans[static_cast<std::size_t>(first)].begin;
  const std::size_t end = last == n ? text.size() : spans[static_cast<std::size_t>(last)].begin;
  return std::string(text.substr(begin, end - begin));
}

std::string normalize_text(std::string_view raw) {
  if (raw.size() >= 3 && raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
    } else {
      out.push_back(raw[i]);
    }
  }
  return out;
}

namespace {

// Returns the chapter number and the byte offset where the body starts, or
// chapter = 0 when `line` carries no marker.
std::pair<int, std::size_t> match_marker(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  constexpr std::string_view kDi = "第";
  constexpr std::string_view kZhang = "章";
  constexpr std::string_view kChapter = "Chapter";
  bool chinese = false;
  if (line.substr(i, kDi.size()) == kDi) {
    i += kDi.size();
    chinese = true;
  } else if (line.substr(i, kChapter.size()) == kChapter) {
    i += kChapter.size();
    while (i < line.size() && line[i] == ' ') ++i;
  } else {
    return {0, 0};
  }
  while (i < line.size() && line[i] == ' ') ++i;
  const std::size_t digits_begin = i;
  int number = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i])) && i - digits_begin < 7) {
    number = number * 10 + (line[i] - '0');
    ++i;
  }
  if (i == digits_begin || number <= 0) return {0, 0};
  while (i < line.size() && line[i] == ' ') ++i;
  if (chinese) {
    if (line.substr(i, kZhang.size()) != kZhang) return {0, 0};
    i += kZhang.size();
  }
  for (std::string_view sep : {std::string_view("："), std::string_view(":"), std::string_view("、")}) {
    if (line.substr(i, sep.size()) == sep) {
      i += sep.size();
      break;
    }
  }
  while (i < line.size() && line[i] == ' ') ++i;
  return {number, i};
}

}  // namespace

std::vector<ChapterSection> parse_chapter_sections(std::string_view outline) {
  std::vector<ChapterSection> sections;
  std::size_t pos = 0;
  while (pos <= outline.size()) {
    const std::size_t nl = outline.find('\n', pos);
    const std::string_view line =
        outline.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const auto [number, body_at] = match_marker(line);
    if (number > 0) {
      sections.push_back({number, std::string(line.substr(body_at))});
    } else if (!sections.empty()) {
      sections.back().body += '\n';
      sections.back().body += line;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  for (auto& s : sections) {
    while (!s.body.empty() && (s.body.back() == '\n' || s.body.back() == ' ')) s.body.pop_back();
  }
  return sections;
}

std::string render_chapter_sections(const std::vector<ChapterSection>& sections) {
  std::string out;
  for (const auto& s : sections) {
    out += "第" + std::to_string(s.chapter) + "章：" + s.body + "\n";
  }
  return out;
}

}  // namespace novelrd
