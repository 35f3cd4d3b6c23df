#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"
#include "novelrd/pipeline/run.hpp"
#include "pipeline_harness.hpp"

using namespace novelrd;
using namespace novelrd::pipeline;
using novelrd::testing::Harness;
using novelrd::testing::ScriptedBackend;

namespace {

struct Book {
  Novel novel;
  std::vector<Chapter> chapters;
};

Book make_book(std::uint64_t seed = 5, int paragraphs = 120, std::int64_t chapter_units = 600) {
  Novel n("book", Genre::Fantasy, "Book", novelrd::testing::synthetic_novel_text(seed, paragraphs));
  auto chapters = split_chapters(n, chapter_units);
  return {std::move(n), std::move(chapters)};
}

std::string detail_payload(const std::string& plot) {
  ChapterDetail d;
  d.plot_summary = plot;
  d.characters = {"Alice"};
  return to_json(d).dump();
}

bool is_subsequence(const std::vector<std::string>& needle, const std::vector<std::string>& hay) {
  std::size_t k = 0;
  for (const auto& u : hay) {
    if (k < needle.size() && u == needle[k]) ++k;
  }
  return k == needle.size();
}

}  // namespace

TEST_CASE("structured stage 1 yields one detail per chapter") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>(), 3);
  const auto a = compress_stage1(book.chapters, Ratio::parse("0.05"), true, h.ctx);
  CHECK(a.level == 1);
  CHECK(a.kind == OutlineKind::Details);
  REQUIRE(a.details.size() == book.chapters.size());
  REQUIRE(a.sections.size() == book.chapters.size());
  for (std::size_t i = 0; i < book.chapters.size(); ++i) CHECK(a.sections[i].chapter == book.chapters[i].index);
  CHECK(a.input_units == book.novel.unit_count());
  CHECK(a.provenance.size() == book.chapters.size());
  CHECK(a.source_hash == sha256_hex(book.novel.text()));
}

TEST_CASE("free-text stage 1 hits the requested length exactly with the mock") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto alpha = Ratio::parse("0.1");
  const auto a = compress_stage1(book.chapters, alpha, false, h.ctx);
  std::int64_t want = 0;
  for (const auto& c : book.chapters) want += alpha.scale_ceil(c.unit_count);
  CHECK(a.kind == OutlineKind::Summaries);
  CHECK(a.unit_count == want);
  CHECK(a.target_units == want);
  CHECK(a.flags.empty());
}

TEST_CASE("stage 1 is deterministic") {
  const auto book = make_book();
  Harness h1(std::make_shared<provider::MockBackend>(), 1);
  Harness h2(std::make_shared<provider::MockBackend>(), 4);
  const auto a = compress_stage1({book.chapters[0]}, Ratio::parse("0.05"), true, h1.ctx);
  const auto b = compress_stage1({book.chapters[0]}, Ratio::parse("0.05"), true, h2.ctx);
  CHECK(a.details.size() == 1);
  CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("fenced stage 1 payloads are repaired without a second request") {
  const auto book = make_book();
  auto backend = std::make_shared<ScriptedBackend>();
  backend->push_text("```json\n" + detail_payload("主角出发") + "\n```");
  Harness h(backend);
  const auto a = compress_stage1({book.chapters[0]}, Ratio::parse("0.05"), true, h.ctx);
  CHECK(backend->calls() == 1);
  CHECK(a.details.at(0).plot_summary == "主角出发");
  bool flagged = false;
  for (const auto& f : a.flags) flagged = flagged || f.find("code fences stripped") != std::string::npos;
  CHECK(flagged);
}

TEST_CASE("malformed stage 1 payloads are re-asked once with the raw JSON suffix") {
  const auto book = make_book();
  auto backend = std::make_shared<ScriptedBackend>();
  backend->push_text("我无法输出JSON");
  backend->push_text(detail_payload("主角出发"));
  Harness h(backend);
  const auto a = compress_stage1({book.chapters[0]}, Ratio::parse("0.05"), true, h.ctx);
  REQUIRE(backend->calls() == 2);
  const auto reqs = backend->requests();
  const auto suffix = std::string(h.templates.get(TemplateId::JsonRepair, Language::Zh));
  CHECK(reqs[1].prompt == reqs[0].prompt + suffix);
  CHECK(a.provenance.size() == 2);
  CHECK(a.details.at(0).plot_summary == "主角出发");
}

TEST_CASE("a second malformed payload is a schema error carrying the payload") {
  const auto book = make_book();
  auto backend = std::make_shared<ScriptedBackend>();
  backend->push_text("not json");
  backend->push_text(R"({"情节摘要导语": "x"})");
  Harness h(backend);
  try {
    compress_stage1({book.chapters[0]}, Ratio::parse("0.05"), true, h.ctx);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.key() == "出现人物");
    CHECK(e.payload() == R"({"情节摘要导语": "x"})");
    CHECK(std::string(e.what()).find("chapter 1") != std::string::npos);
  }
}

TEST_CASE("provider failures become stage errors naming the chapter") {
  const auto book = make_book();
  auto backend = std::make_shared<ScriptedBackend>();
  backend->push_error(std::make_exception_ptr(provider::ProviderError(400, "bad request")));
  Harness h(backend);
  try {
    compress_stage1({book.chapters[0]}, Ratio::parse("0.05"), false, h.ctx);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("chapter 1") != std::string::npos);
  }
}

TEST_CASE("stage preconditions") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  CHECK_THROWS_AS(compress_stage1({}, Ratio::parse("0.05"), true, h.ctx), DomainError);
  CHECK_THROWS_AS(compress_stage1(book.chapters, Ratio(1, 1), true, h.ctx), DomainError);
  CHECK_THROWS_AS(compress_direct(book.novel, 0, h.ctx), DomainError);
  PipelineContext empty;
  CHECK_THROWS_AS(compress_direct(book.novel, 10, empty), ConfigError);
}

TEST_CASE("stage 2 keeps chapter numbers and lands in the band") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto s1 = compress_stage1(book.chapters, Ratio::parse("0.2"), false, h.ctx);
  const auto s2 = compress_stage2(s1, Ratio::parse("0.2"), h.ctx);
  CHECK(s2.level == 2);
  CHECK(s2.kind == OutlineKind::Sectioned);
  REQUIRE(s2.sections.size() == s1.sections.size());
  for (std::size_t i = 0; i < s1.sections.size(); ++i) CHECK(s2.sections[i].chapter == s1.sections[i].chapter);
  const double want = 0.2 * static_cast<double>(s1.unit_count);
  CHECK(static_cast<double>(s2.unit_count) >= 0.8 * want);
  CHECK(static_cast<double>(s2.unit_count) <= 1.2 * want);
  CHECK(book.novel.unit_count() > s1.unit_count);
  CHECK(s1.unit_count > s2.unit_count);
  CHECK_THROWS_AS(compress_stage2(s2, Ratio::parse("0.2"), h.ctx), DomainError);
}

TEST_CASE("stage 2 with alpha 1 passes the stage 1 text through") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto s1 = compress_stage1(book.chapters, Ratio::parse("0.2"), true, h.ctx);
  const auto s2 = compress_stage2(s1, Ratio(1, 1), h.ctx);
  CHECK(s2.text == s1.text);
}

TEST_CASE("stage 2 output without markers is flagged") {
  const auto book = make_book();
  auto backend = std::make_shared<ScriptedBackend>();
  Harness h(backend);
  backend->set_fallback([](const provider::GenerationRequest& r) {
    return provider::GenerationResponse{r.hint.at("source").substr(0, 30), 1, 1, 0};
  });
  const auto s1 = compress_stage1(book.chapters, Ratio::parse("0.2"), false, h.ctx);
  backend->set_fallback([](const provider::GenerationRequest&) {
    return provider::GenerationResponse{"一段没有章节标记的大纲", 1, 1, 0};
  });
  const auto s2 = compress_stage2(s1, Ratio::parse("0.5"), h.ctx);
  CHECK(s2.kind == OutlineKind::Direct);
  CHECK_FALSE(s2.flags.empty());
}

TEST_CASE("direct compression is a prefix plus the recorded last title") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto a = compress_direct(book.novel, 100, h.ctx);
  CHECK(a.unit_count == 100);
  CHECK(a.text == take_units(book.novel.text(), 100));
  CHECK_FALSE(a.last_chapter_title.empty());
  CHECK(a.flags.empty());
}

TEST_CASE("last title trailers") {
  auto [body, title] = split_last_title("大纲正文\n最后一章标题：归来");
  CHECK(body == "大纲正文");
  CHECK(title == "归来");
  std::tie(body, title) = split_last_title("outline\nTitle of the last chapter: Home");
  CHECK(body == "outline");
  CHECK(title == "Home");
  std::tie(body, title) = split_last_title("只有正文");
  CHECK(body == "只有正文");
  CHECK(title.empty());
}

TEST_CASE("over-long direct outlines are flagged and kept") {
  const auto book = make_book();
  auto backend = std::make_shared<ScriptedBackend>();
  backend->push_text(take_units(book.novel.text(), 200) + "\n最后一章标题：终");
  Harness h(backend);
  const auto a = compress_direct(book.novel, 100, h.ctx);
  CHECK(a.unit_count == 200);
  CHECK(a.last_chapter_title == "终");
  CHECK(a.flags.size() == 1);
}

TEST_CASE("mixed expansion reaches the minimum and contains its section") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto s1 = compress_stage1(book.chapters, Ratio::parse("0.2"), true, h.ctx);
  const auto s2 = compress_stage2(s1, Ratio::parse("0.5"), h.ctx);
  const auto r = expand_to_chapter(s2, book.chapters, 2, 500, Variant::MixedTwoStage, h.ctx);
  CHECK(r.unit_count >= 450);
  CHECK(r.flags.empty());
  CHECK(is_subsequence(unit_strings(s2.sections.at(1).body), unit_strings(r.reconstructed_text)));
  CHECK_FALSE(r.intermediate.has_value());
}

TEST_CASE("hierarchical expansion goes through a 200-300 unit detail") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto s1 = compress_stage1(book.chapters, Ratio::parse("0.2"), true, h.ctx);
  const auto s2 = compress_stage2(s1, Ratio::parse("0.5"), h.ctx);
  const auto r = expand_to_chapter(s2, book.chapters, 1, 500, Variant::HierarchicalTwoStage, h.ctx);
  REQUIRE(r.intermediate.has_value());
  const auto plot = count_units(r.intermediate->plot_summary);
  CHECK(plot >= 200);
  CHECK(plot <= 300);
  CHECK(r.provenance.size() == 2);
  CHECK(is_subsequence(unit_strings(render_detail(*r.intermediate)), unit_strings(r.reconstructed_text)));
}

TEST_CASE("templates follow the variant") {
  const auto book = make_book();
  auto backend = std::make_shared<ScriptedBackend>();
  backend->set_fallback([](const provider::GenerationRequest&) {
    return provider::GenerationResponse{"短", 1, 1, 0};
  });
  Harness h(backend);
  OutlineArtifact outline;
  outline.level = 1;
  outline.text = "大纲";
  const auto r = expand_to_chapter(outline, book.chapters, 1, 100, Variant::LongWriterBaseline, h.ctx);
  const auto lw = h.templates.render(TemplateId::LongWriterExpand, Language::Zh,
                                     {{"chap_num", "1"}, {"min_units", "100"}, {"outline_text", "大纲"}});
  CHECK(backend->requests().back().prompt == lw);
  CHECK_FALSE(r.flags.empty());
  expand_to_chapter(outline, book.chapters, 1, 100, Variant::SingleStage, h.ctx);
  const auto direct = h.templates.render(TemplateId::DirectExpand, Language::Zh,
                                         {{"chap_num", "1"}, {"min_units", "100"}, {"outline_text", "大纲"}});
  CHECK(backend->requests().back().prompt == direct);
}

TEST_CASE("expansion preconditions") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto direct = compress_direct(book.novel, 100, h.ctx);
  CHECK_THROWS_AS(expand_to_chapter(direct, book.chapters, 99, 100, Variant::SingleStage, h.ctx), StageError);
  CHECK_THROWS_AS(expand_to_chapter(direct, book.chapters, 1, 100, Variant::MixedTwoStage, h.ctx), StageError);
  CHECK_THROWS_AS(expand_to_chapter(direct, book.chapters, 1, 0, Variant::SingleStage, h.ctx), DomainError);
  OutlineArtifact partial;
  partial.level = 2;
  partial.kind = OutlineKind::Sectioned;
  partial.sections = {{1, "只有第一章"}};
  partial.text = render_chapter_sections(partial.sections);
  CHECK_THROWS_AS(expand_to_chapter(partial, book.chapters, 2, 100, Variant::MixedTwoStage, h.ctx), StageError);
}

TEST_CASE("mixed and hierarchical share byte-identical compression artifacts") {
  const auto book = make_book();
  Harness h1(std::make_shared<provider::MockBackend>());
  Harness h2(std::make_shared<provider::MockBackend>());
  PipelineConfig mixed{"X", Variant::MixedTwoStage, {Ratio::parse("0.05"), Ratio::parse("0.2")}, true};
  PipelineConfig hier = mixed;
  hier.variant = Variant::HierarchicalTwoStage;
  const auto a = compress_for(mixed, book.novel, book.chapters, h1.ctx);
  const auto b = compress_for(hier, book.novel, book.chapters, h2.ctx);
  REQUIRE(a.size() == 2);
  REQUIRE(b.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(to_json(a[i]).dump() == to_json(b[i]).dump());
}

TEST_CASE("artifacts and results round-trip through JSON") {
  const auto book = make_book();
  Harness h(std::make_shared<provider::MockBackend>());
  const auto s1 = compress_stage1(book.chapters, Ratio::parse("0.2"), true, h.ctx);
  CHECK(to_json(artifact_from_json(to_json(s1))).dump() == to_json(s1).dump());
  const auto s2 = compress_stage2(s1, Ratio::parse("0.5"), h.ctx);
  const auto r = expand_to_chapter(s2, book.chapters, 1, 300, Variant::HierarchicalTwoStage, h.ctx);
  CHECK(to_json(reconstruction_from_json(to_json(r))).dump() == to_json(r).dump());
}
