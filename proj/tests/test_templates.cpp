#include <catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "novelrd/error.hpp"
#include "novelrd/pipeline/templates.hpp"

using namespace novelrd;
using namespace novelrd::pipeline;

namespace {

constexpr TemplateId kAll[] = {TemplateId::LongWriterExpand, TemplateId::Stage1Extract, TemplateId::Stage1Summary,
                               TemplateId::Stage2Compress,   TemplateId::Stage2ExpandDetail,
                               TemplateId::DirectCompress,   TemplateId::DirectExpand,
                               TemplateId::Judge,            TemplateId::JsonRepair};

}  // namespace

TEST_CASE("placeholders substitute in one pass") {
  CHECK(render_template("a {x} b {y}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
  CHECK(render_template("{x}", {{"x", "{y}"}, {"y", "no"}}) == "{y}");
  CHECK(render_template(R"({"情节摘要导语": "..."})", {}) == R"({"情节摘要导语": "..."})");
  CHECK(render_template("{} {X} {a-b}", {}) == "{} {X} {a-b}");
  CHECK_THROWS_AS(render_template("{missing}", {}), ConfigError);
}

TEST_CASE("embedded templates exist for both languages") {
  const auto set = TemplateSet::embedded();
  for (auto lang : {Language::Zh, Language::En}) {
    for (auto id : kAll) {
      INFO(file_stem(id));
      CHECK_FALSE(set.get(id, lang).empty());
      CHECK(set.get(id, lang).back() != '\n');
    }
  }
  CHECK(set.version().size() == 64);
  CHECK(set.get(TemplateId::Stage1Extract, Language::Zh).find("情节摘要导语") != std::string_view::npos);
  CHECK(set.get(TemplateId::Stage1Extract, Language::Zh).find("伏笔_回收") != std::string_view::npos);
}

TEST_CASE("a template directory overrides the embedded set") {
  novelrd::testing::TempDir dir;
  const auto embedded = TemplateSet::embedded();
  for (auto lang : {Language::Zh, Language::En}) {
    for (auto id : kAll) {
      novelrd::testing::write_text(dir.path() / std::string(to_string(lang)) / (std::string(file_stem(id)) + ".txt"),
                                   std::string(embedded.get(id, lang)) + "\n");
    }
  }
  auto same = TemplateSet::from_directory(dir.path());
  CHECK(same.version() == embedded.version());
  novelrd::testing::write_text(dir.path() / "zh" / "judge.txt", "比较 {text_a} 与 {text_b}\n");
  const auto edited = TemplateSet::from_directory(dir.path());
  CHECK(edited.version() != embedded.version());
  CHECK(edited.render(TemplateId::Judge, Language::Zh, {{"text_a", "甲"}, {"text_b", "乙"}}) == "比较 甲 与 乙");
  std::filesystem::remove(dir.path() / "en" / "judge.txt");
  CHECK_THROWS_AS(TemplateSet::from_directory(dir.path()), ConfigError);
}

TEST_CASE("language names") {
  CHECK(parse_language("zh") == Language::Zh);
  CHECK(parse_language("en") == Language::En);
  CHECK_THROWS_AS(parse_language("fr"), ConfigError);
}
