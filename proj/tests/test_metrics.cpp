#include <catch_amalgamated.hpp>

#include <numbers>

#include "fixtures.hpp"
#include "novelrd/error.hpp"
#include "novelrd/metrics.hpp"
#include "novelrd/provider/mock.hpp"
#include "oracles.hpp"

using namespace novelrd;
using namespace novelrd::metrics;
using Catch::Approx;
using novelrd::testing::ScriptedBackend;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::string judge_json(double s) {
  return nlohmann::json{{"semantic_similarity", s},
                        {"plot_similarity", s},
                        {"character_similarity", s},
                        {"background_similarity", s},
                        {"style_similarity", s},
                        {"props_a", {"#sword"}},
                        {"props_b", nlohmann::json::array()},
                        {"characters_a", {"Alice", "Bob"}},
                        {"characters_b", {"Alice"}},
                        {"scenes_a", {"@palace"}},
                        {"scenes_b", {"@palace"}}}
      .dump();
}

}  // namespace

TEST_CASE("cosine identity, orthogonality and known angles") {
  CHECK(cosine_similarity(vec({1, 2, 3}), vec({1, 2, 3})) == Approx(1.0).margin(1e-8));
  CHECK(cosine_similarity(vec({1, 0}), vec({0, 5})) == Approx(0.0).margin(1e-8));
  CHECK(cosine_similarity(vec({1, 0}), vec({-2, 0})) == Approx(-1.0).margin(1e-8));
  CHECK(cosine_similarity(vec({1, 0}), vec({1, 1})) == Approx(std::cos(std::numbers::pi / 4)).margin(1e-8));
  CHECK(cosine_similarity(vec({1, 0}), vec({1, std::sqrt(3.0)})) == Approx(0.5).margin(1e-8));
  CHECK(cosine_similarity(vec({3, 4}), vec({6, 8})) == Approx(1.0).margin(1e-8));
  CHECK_THROWS_AS(cosine_similarity(vec({0, 0}), vec({1, 0})), DomainError);
  CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), DomainError);
}

TEST_CASE("BERT-style scores match exhaustive matching") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = novelrd::testing::random_integer_rows(rng, len(rng), 4);
    const auto b = novelrd::testing::random_integer_rows(rng, len(rng), 4);
    const auto got = bert_style_scores(stack_rows(a), stack_rows(b));
    const auto want = novelrd::testing::ref_bert(a, b);
    CHECK(got.precision == want.precision);
    CHECK(got.recall == want.recall);
    CHECK(got.f1 == want.f1);
  }
}

TEST_CASE("weights act as multiplicities") {
  std::mt19937_64 rng(9);
  auto a = novelrd::testing::random_integer_rows(rng, 3, 4);
  const auto b = novelrd::testing::random_integer_rows(rng, 2, 4);
  Eigen::VectorXd wa(3);
  wa << 2, 1, 1;
  const auto weighted = bert_style_scores_weighted(stack_rows(a), wa, stack_rows(b), Eigen::VectorXd::Ones(2));
  auto expanded = a;
  expanded.push_back(a[0]);
  const auto plain = bert_style_scores(stack_rows(expanded), stack_rows(b));
  CHECK(weighted.recall == Approx(plain.recall).epsilon(1e-14));
  CHECK(weighted.precision == Approx(plain.precision).epsilon(1e-14));
}

TEST_CASE("BERT-style scores reject empty token lists") {
  Eigen::MatrixXd empty(0, 3);
  Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 3);
  CHECK_THROWS_AS(bert_style_scores(empty, one), DomainError);
  CHECK(bert_style_scores(one, one).f1 == 1.0);
}

TEST_CASE("judge payload parsing") {
  const auto r = parse_judge_payload(judge_json(0.5));
  CHECK(r.semantic == 0.5);
  CHECK(r.mean5() == 0.5);
  CHECK(counts_of(r.entities_a).characters == 2);
  CHECK(counts_of(r.entities_b).props == 0);
  CHECK(r.warnings.empty());

  const auto fenced = parse_judge_payload("```json\n" + judge_json(0.5) + "\n```");
  CHECK(fenced.warnings.size() == 1);

  auto j = nlohmann::json::parse(judge_json(1.3));
  j["characters_a"] = {"Alice", "Alice", "Bob"};
  j["characters_a_count"] = 3;
  j["scenes_b"] = nullptr;
  const auto clamped = parse_judge_payload(j.dump());
  CHECK(clamped.semantic == 1.0);
  CHECK(clamped.entities_a.characters.size() == 2);
  CHECK(clamped.entities_b.scenes.empty());
  CHECK(clamped.warnings.size() == 6);

  j = nlohmann::json::parse(judge_json(0.5));
  j.erase("style_similarity");
  try {
    parse_judge_payload(j.dump());
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.key() == "style_similarity");
  }
  CHECK_THROWS_AS(parse_judge_payload("nope"), SchemaError);
}

TEST_CASE("structural distance") {
  const auto d = struct_distance({3, 1, 2}, {1, 1, 0});
  CHECK(d.char_diff == 2);
  CHECK(d.scene_diff == 0);
  CHECK(d.prop_diff == 2);
  CHECK(d.euclid == Approx(std::sqrt(8.0)));
  CHECK_THROWS_AS(struct_distance({-1, 0, 0}, {0, 0, 0}), DomainError);
}

TEST_CASE("composite distortion from printed row values") {
  SimilarityReport r;
  r.cosine = 0.677;
  r.bert_f1 = 0.199;
  JudgeReport j;
  j.semantic = 0.613;
  j.character = 0.566;
  j.style = 0.611;
  j.plot = 0.6;
  j.background = 0.6;
  r.judge = j;
  r.structure = StructDistance{1, 1, 1, std::sqrt(3.0)};
  const auto d = composite_distortion(r);
  CHECK(d.d_trad == Approx(0.562).margin(1e-3));
  CHECK(*d.d_llm3 == Approx(0.403).margin(1e-3));
  CHECK(*d.d_struct_norm == Approx(std::sqrt(3.0) / 20.0));
  CHECK(d.d_total == Approx((d.d_trad + *d.d_llm + *d.d_struct_norm) / 3.0));
  CHECK_FALSE(d.partial);
}

TEST_CASE("composite without a judge is partial") {
  SimilarityReport r;
  r.cosine = 0.5;
  r.bert_f1 = 0.5;
  CompositeOptions o;
  o.epsilon = 0.6;
  const auto d = composite_distortion(r, o);
  CHECK(d.partial);
  CHECK_FALSE(d.d_llm.has_value());
  CHECK(d.d_total == 0.5);
  CHECK(*d.within_epsilon);
  o.norm_cap = 0;
  CHECK_THROWS_AS(composite_distortion(r, o), ConfigError);
}

TEST_CASE("distortion of identical texts is zero") {
  auto backend = std::make_shared<provider::MockBackend>();
  provider::ProviderClient client({}, backend, std::nullopt, std::make_shared<provider::SimulatedClock>());
  const auto templates = pipeline::TemplateSet::embedded();
  const std::string text = novelrd::testing::synthetic_novel_text(4, 5);
  const auto ev = evaluate_chapter(text, text, client, templates);
  CHECK(ev.report.cosine == 1.0);
  CHECK(ev.report.bert_f1 == 1.0);
  CHECK(ev.composite.d_total == 0.0);
  CHECK_FALSE(ev.composite.partial);
}

TEST_CASE("a failing judge leaves a partial evaluation") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->push_text("not json");
  backend->push_text("still not json");
  provider::ProviderClient client({}, backend, std::nullopt, std::make_shared<provider::SimulatedClock>());
  const auto templates = pipeline::TemplateSet::embedded();
  const auto ev = evaluate_chapter("一二三 Alice", "一二四 Alice", client, templates);
  CHECK(ev.composite.partial);
  CHECK_FALSE(ev.report.judge.has_value());
  CHECK_FALSE(ev.judge_error.empty());
  CHECK(backend->calls() == 2);
}

TEST_CASE("judge repair retry") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->push_text("not json");
  backend->push_text(judge_json(0.8));
  provider::ProviderClient client({}, backend, std::nullopt, std::make_shared<provider::SimulatedClock>());
  const auto templates = pipeline::TemplateSet::embedded();
  std::vector<provider::CacheKey> keys;
  const auto r = judge_similarity("甲", "乙", client, templates, pipeline::Language::Zh, &keys);
  CHECK(r.semantic == 0.8);
  CHECK(keys.size() == 2);
  CHECK(r.warnings.back().find("repaired") != std::string::npos);
}
