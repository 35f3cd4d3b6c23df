#include <catch_amalgamated.hpp>

#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"
#include "novelrd/units.hpp"

using namespace novelrd;

TEST_CASE("mixed mode counts each ideograph and each latin run") {
  CHECK(count_units("Hello 世界!", UnitMode::Mixed) == 4);
  CHECK(count_units("Hello 世界!", UnitMode::Whitespace) == 2);
  CHECK(count_units("Hello 世界!", UnitMode::CJKChar) == 2);
  CHECK(count_units("", UnitMode::Mixed) == 0);
  CHECK(count_units(" \n\t ", UnitMode::Mixed) == 0);
}

TEST_CASE("CJK punctuation and fullwidth forms are one unit each") {
  CHECK(count_units("你好，世界。", UnitMode::Mixed) == 6);
  CHECK(count_units("「对」", UnitMode::CJKChar) == 3);
  CHECK(count_units("ＡＢ", UnitMode::Mixed) == 2);
}

TEST_CASE("latin runs glued to ideographs split at the script boundary") {
  const auto units = unit_strings("他叫Alice吗", UnitMode::Mixed);
  REQUIRE(units.size() == 4);
  CHECK(units[0] == "他");
  CHECK(units[1] == "叫");
  CHECK(units[2] == "Alice");
  CHECK(units[3] == "吗");
}

TEST_CASE("ideographic space separates units") {
  CHECK(count_units("ab　cd", UnitMode::Whitespace) == 2);
}

TEST_CASE("invalid UTF-8 bytes still belong to some unit") {
  const std::string bad = std::string("ab") + char(0xFF) + "cd";
  CHECK(count_units(bad, UnitMode::Whitespace) == 1);
  CHECK(count_units(bad, UnitMode::Mixed) >= 1);
}

TEST_CASE("take_units and unit_slice") {
  const std::string text = "一二三 four 五";
  CHECK(take_units(text, 2) == "一二");
  CHECK(take_units(text, 4) == "一二三 four");
  CHECK(take_units(text, 99) == text);
  CHECK(take_units(text, 0).empty());
  CHECK(unit_slice(text, 0, 2) == "一二");
  CHECK(unit_slice(text, 3, 5) == "four 五");
}

TEST_CASE("normalize_text strips a BOM and unifies line endings") {
  CHECK(normalize_text("\xEF\xBB\xBF" "a\r\nb\rc\n") == "a\nb\nc\n");
  CHECK(normalize_text("plain") == "plain");
}

TEST_CASE("unit mode names round-trip") {
  for (auto m : {UnitMode::Whitespace, UnitMode::CJKChar, UnitMode::Mixed}) {
    CHECK(parse_unit_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_unit_mode("bogus"), ConfigError);
}

TEST_CASE("chapter sections parse and render") {
  const std::string outline = "前言\n第1章：开端。\n继续。\n第2章：转折。\nChapter 3: end\n";
  const auto sections = parse_chapter_sections(outline);
  REQUIRE(sections.size() == 3);
  CHECK(sections[0].chapter == 1);
  CHECK(sections[0].body == "开端。\n继续。");
  CHECK(sections[1].chapter == 2);
  CHECK(sections[2].chapter == 3);
  CHECK(sections[2].body == "end");
  const auto again = parse_chapter_sections(render_chapter_sections(sections));
  REQUIRE(again.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(again[i].chapter == sections[i].chapter);
    CHECK(again[i].body == sections[i].body);
  }
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(hash64("abc") == 0xba7816bf8f01cfeaULL);
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
}
