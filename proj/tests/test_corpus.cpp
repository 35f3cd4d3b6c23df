#include <catch_amalgamated.hpp>

#include <numeric>

#include "fixtures.hpp"
#include "novelrd/corpus.hpp"
#include "novelrd/error.hpp"

using namespace novelrd;
using novelrd::testing::TempDir;

TEST_CASE("manifest paths resolve against the manifest directory") {
  TempDir dir;
  const auto manifest = novelrd::testing::write_synthetic_corpus(dir.path(), 3, 20);
  const auto m = load_manifest(manifest);
  REQUIRE(m.entries.size() == 3);
  CHECK(m.entries[0].path == dir.path() / "novel1.txt");
  CHECK(m.entries[1].genre == Genre::Romance);
  CHECK(m.entries[2].title == "Novel 3");
  const auto novels = ingest_corpus(m);
  REQUIRE(novels.size() == 3);
  CHECK(novels[0].id() == "novel1");
  CHECK(novels[0].unit_count() == count_units(novels[0].text()));
}

TEST_CASE("manifest errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_manifest(dir / "missing.json"), IngestError);
  CHECK_THROWS_AS(parse_manifest("{", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_manifest("{}", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"([{"path":"a.txt"}])", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"([{"path":"a.txt","genre":"scifi"}])", dir.path()), ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"([{"path":"a.txt","genre":"urban"},{"path":"a.txt","genre":"urban"}])", dir.path()),
                  ConfigError);
}

TEST_CASE("missing and empty corpus files name the path") {
  TempDir dir;
  novelrd::testing::write_text(dir / "empty.txt", "  \n\n");
  auto m = parse_manifest(R"([{"path":"empty.txt","genre":"urban"}])", dir.path());
  try {
    ingest_corpus(m);
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(e.path() == (dir / "empty.txt").string());
  }
  m = parse_manifest(R"([{"path":"gone.txt","genre":"urban"}])", dir.path());
  try {
    ingest_corpus(m);
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(e.path() == (dir / "gone.txt").string());
  }
}

TEST_CASE("duplicate stems are disambiguated") {
  TempDir dir;
  novelrd::testing::write_text(dir / "a" / "book.txt", "一二三");
  novelrd::testing::write_text(dir / "b" / "book.txt", "四五六");
  const auto m = parse_manifest(
      R"([{"path":"a/book.txt","genre":"urban"},{"path":"b/book.txt","genre":"fantasy"}])", dir.path());
  const auto novels = ingest_corpus(m);
  CHECK(novels[0].id() == "book");
  CHECK(novels[1].id() == "book-2");
}

TEST_CASE("chapters concatenate to the novel and stay in the size band") {
  const Novel novel("n", Genre::Urban, "t", novelrd::testing::synthetic_novel_text(7, 200));
  const auto chapters = split_chapters(novel, 500);
  REQUIRE(chapters.size() > 3);
  std::string joined;
  std::int64_t units = 0;
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    const auto& ch = chapters[i];
    CHECK(ch.index == static_cast<int>(i) + 1);
    CHECK(ch.byte_offset == joined.size());
    CHECK(ch.unit_count == count_units(ch.text));
    if (i + 1 < chapters.size()) {
      CHECK(ch.unit_count >= 400);
      CHECK(ch.unit_count <= 600);
    }
    joined += ch.text;
    units += ch.unit_count;
  }
  CHECK(joined == novel.text());
  CHECK(units == novel.unit_count());
}

TEST_CASE("cuts prefer paragraph breaks") {
  const Novel novel("n", Genre::Urban, "t", novelrd::testing::synthetic_novel_text(3, 100));
  for (const auto& ch : split_chapters(novel, 300)) {
    if (ch.index > 1) CHECK(novel.text().substr(ch.byte_offset - 2, 2) == "\n\n");
  }
}

TEST_CASE("text without line breaks is cut at the exact limit") {
  std::string text;
  for (int i = 0; i < 1000; ++i) text += "字";
  const Novel novel("n", Genre::Urban, "t", text);
  const auto chapters = split_chapters(novel, 100);
  REQUIRE(chapters.size() == 10);
  for (const auto& ch : chapters) CHECK(ch.unit_count == 100);
}

TEST_CASE("short novels become one chapter") {
  const Novel novel("n", Genre::Urban, "t", "一二三");
  const auto chapters = split_chapters(novel, 5000);
  REQUIRE(chapters.size() == 1);
  CHECK(chapters[0].text == "一二三");
  CHECK_THROWS_AS(split_chapters(novel, 0), DomainError);
}

TEST_CASE("corpus hash tracks content") {
  const Novel a("a", Genre::Urban, "t", "一二三");
  const Novel b("a", Genre::Urban, "t", "一二四");
  CHECK(corpus_hash({a}) == corpus_hash({a}));
  CHECK(corpus_hash({a}) != corpus_hash({b}));
}
