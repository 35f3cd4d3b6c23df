#include <catch_amalgamated.hpp>

#include "novelrd/error.hpp"
#include "novelrd/pipeline/config.hpp"

using namespace novelrd;
using namespace novelrd::pipeline;

TEST_CASE("decimal ratios are exact") {
  CHECK(Ratio::parse("0.05") == Ratio(1, 20));
  CHECK(Ratio::parse("1") == Ratio(1, 1));
  CHECK(Ratio::parse("0.10") == Ratio(1, 10));
  CHECK(Ratio::parse(".5") == Ratio(1, 2));
  CHECK((Ratio::parse("0.05") * Ratio::parse("0.20")) == Ratio(1, 100));
  CHECK((Ratio::parse("0.05") * Ratio::parse("0.20")).value() == 0.01);
  CHECK(Ratio(1, 100).str() == "0.01");
  CHECK(Ratio(1, 2000).str() == "0.0005");
  CHECK(Ratio(1, 3).str() == "1/3");
  for (const char* bad : {"", "abc", "-0.1", "1e-2", "0.1.2", " 0.1"}) {
    INFO(bad);
    CHECK_THROWS_AS(Ratio::parse(bad), ConfigError);
  }
}

TEST_CASE("scale_ceil rounds up in integer arithmetic") {
  CHECK(Ratio::parse("0.01").scale_ceil(5000) == 50);
  CHECK(Ratio::parse("0.01").scale_ceil(5001) == 51);
  CHECK(Ratio::parse("0.05").scale_ceil(1) == 1);
  CHECK(Ratio(1, 1).scale_ceil(123) == 123);
}

TEST_CASE("config validation") {
  PipelineConfig c{"x", Variant::SingleStage, {Ratio::parse("0.01")}, false};
  CHECK_NOTHROW(c.validate());
  c.alphas.push_back(Ratio::parse("0.1"));
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.variant = Variant::HierarchicalTwoStage;
  CHECK_NOTHROW(c.validate());
  c.alphas[0] = Ratio(1, 1);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.alphas[0] = Ratio(3, 2);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.alphas.clear();
  CHECK_THROWS_AS(compute_R(c), ConfigError);
}

TEST_CASE("variant names round-trip") {
  for (auto v : {Variant::SingleStage, Variant::HierarchicalTwoStage, Variant::MixedTwoStage,
                 Variant::LongWriterBaseline}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK_THROWS_AS(parse_variant("three_stage"), ConfigError);
}

TEST_CASE("embedded grid") {
  const auto grid = ConfigGrid::embedded();
  CHECK(grid.entries().size() == 14);
  CHECK(compute_R(grid.find("K2-*").config) == 0.01);
  CHECK(compute_R(grid.find("K2-1").config) == 0.005);
  CHECK(compute_R(grid.find("K2-9").config) == 0.02);
  CHECK(grid.find("K2-*").config.variant == Variant::MixedTwoStage);
  CHECK_FALSE(grid.find("B").supported);
  CHECK_THROWS_AS(grid.find("K9"), ConfigError);
}

TEST_CASE("grid entries round-trip and can be replaced") {
  auto grid = ConfigGrid::embedded();
  auto e = grid_entry_from_json(nlohmann::json::parse(
      R"({"id":"K2-x","variant":"hierarchical","alphas":["0.2", 0.5],"structured":true})"));
  CHECK(e.config.R_exact() == Ratio(1, 10));
  grid.add(e);
  CHECK(grid.contains("K2-x"));
  const auto size = grid.entries().size();
  e.config.alphas[1] = Ratio::parse("0.25");
  grid.add(e);
  CHECK(grid.entries().size() == size);
  CHECK(grid.find("K2-x").config.R_exact() == Ratio(1, 20));
  const auto back = grid_entry_from_json(to_json(grid.find("C")));
  CHECK(back.config.alphas == grid.find("C").config.alphas);
  CHECK(back.printed_r == "0.010");
  CHECK_THROWS_AS(ConfigGrid::parse("{"), ConfigError);
}
