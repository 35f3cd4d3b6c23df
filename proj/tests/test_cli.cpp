#include <catch_amalgamated.hpp>

#include <atomic>
#include <sstream>

#include "fixtures.hpp"
#include "novelrd/cli/commands.hpp"
#include "novelrd/provider/mock.hpp"

using namespace novelrd;
using namespace novelrd::cli;
namespace fs = std::filesystem;
using novelrd::testing::TempDir;

namespace {

struct Workspace {
  TempDir dir;
  std::ostringstream out;
  std::ostringstream err;
  CommandEnv env;
  GlobalOptions g;

  explicit Workspace(nlohmann::json extra = nlohmann::json::object(), int paragraphs = 100) {
    testing::write_synthetic_corpus(dir.path(), 4, paragraphs, 5);
    nlohmann::json cfg = {{"corpus", "manifest.json"},
                          {"chapter_units", 500},
                          {"output_dir", "out"},
                          {"sample", {{"n", 2}, {"chapters_per_novel", 3}}},
                          {"mock", true}};
    cfg.merge_patch(extra);
    testing::write_text(dir / "run.json", cfg.dump(2));
    env.out = &out;
    env.err = &err;
    g.config = dir / "run.json";
  }

  Layout layout() const { return Layout{dir / "out"}; }

  int all() {
    for (auto* cmd : {cmd_sample, cmd_run, cmd_evaluate, cmd_report}) {
      if (const int rc = cmd(g, env); rc != kOk) return rc;
    }
    return kOk;
  }
};

}  // namespace

TEST_CASE("configuration errors exit with code 2") {
  Workspace w;
  GlobalOptions missing;
  missing.config = w.dir / "nope.json";
  CHECK(cmd_sample(missing, w.env) == kConfigError);

  CHECK(cmd_run(w.g, w.env) == kConfigError);
  CHECK(w.err.str().find("run `sample` first") != std::string::npos);

  CHECK(cmd_ingest(w.g, w.env, w.dir / "absent_manifest.json") == kConfigError);
  CHECK(cmd_evaluate(w.g, w.env) == kConfigError);
}

TEST_CASE("unsupported configs are rejected") {
  Workspace w(nlohmann::json{{"configs", {"C", "B"}}});
  REQUIRE(cmd_sample(w.g, w.env) == kOk);
  CHECK(cmd_run(w.g, w.env) == kConfigError);
  CHECK(w.err.str().find("config B") != std::string::npos);
}

TEST_CASE("run config parsing") {
  TempDir dir;
  const auto cfg = run_config_from_json(
      {{"corpus", "c/manifest.json"},
       {"configs", {"C"}},
       {"seed", 9},
       {"sample", {{"n", 6}, {"chapters_per_novel", 4}, {"S_h", {{"romance", 2.0}}}}},
       {"weights", {{"trad", 2.0}, {"llm", 1.0}, {"struct", 0.0}}},
       {"stats", {{"metric", "d_trad"}, {"pooled", true}, {"bonferroni", true}}}},
      dir.path());
  CHECK(cfg.corpus_manifest == dir / "c/manifest.json");
  CHECK(cfg.config_ids == std::vector<std::string>{"C"});
  CHECK(cfg.seed == 9);
  CHECK(cfg.sample_n == 6);
  CHECK(cfg.chapters_per_novel == 4);
  CHECK(cfg.S_h.at(Genre::Romance) == 2.0);
  CHECK(cfg.composite.w_trad == 2.0);
  CHECK(cfg.composite.w_struct == 0.0);
  CHECK(cfg.significance_metric == "d_trad");
  CHECK(cfg.pooled);
  CHECK(cfg.bonferroni);
  CHECK(cfg.cache_path() == cfg.output_dir / "cache");
  CHECK_THROWS_AS(run_config_from_json({{"seed", "x"}}, dir.path()), ConfigError);
}

TEST_CASE("global flags override the file") {
  Workspace w;
  GlobalOptions g = w.g;
  g.seed = 77;
  g.cache_dir = w.dir / "elsewhere";
  const auto cfg = resolve_config(g);
  CHECK(cfg.seed == 77);
  CHECK(cfg.cache_path() == w.dir / "elsewhere");
  CHECK(cfg.mock);
}

TEST_CASE("full command sequence and verify") {
  Workspace w;
  REQUIRE(cmd_ingest(w.g, w.env) == kOk);
  CHECK(fs::exists(w.layout().corpus_index()));
  REQUIRE(w.all() == kOk);
  CHECK(w.out.str().find("18 done, 0 failed, 0 skipped") != std::string::npos);
  CHECK(w.out.str().find("evaluated 18 chapters") != std::string::npos);
  CHECK(fs::exists(w.layout().report_dir() / "summary.csv"));

  w.out.str("");
  CHECK(cmd_verify(w.g, w.env) == kOk);
  const auto v = w.out.str();
  CHECK(v.find("FAIL") == std::string::npos);
  CHECK(v.find("PASS configuration grid validates") != std::string::npos);
  CHECK(v.find("NOTE R of K2-3") != std::string::npos);
}

TEST_CASE("verify detects a tampered summary") {
  Workspace w;
  REQUIRE(w.all() == kOk);
  auto summary = testing::read_text(w.layout().report_dir() / "summary.csv");
  summary[summary.size() - 3] = summary[summary.size() - 3] == '0' ? '1' : '0';
  testing::write_text(w.layout().report_dir() / "summary.csv", summary);
  w.out.str("");
  CHECK(cmd_verify(w.g, w.env) != kOk);
  CHECK(w.out.str().find("FAIL") != std::string::npos);
}

TEST_CASE("rerunning resumes without provider calls") {
  Workspace w;
  REQUIRE(cmd_sample(w.g, w.env) == kOk);
  REQUIRE(cmd_run(w.g, w.env) == kOk);
  const auto before = testing::snapshot_tree(w.layout().run_dir() / "reconstructions");

  auto counting = std::make_shared<testing::CountingBackend>(std::make_shared<provider::MockBackend>());
  w.env.backend = counting;
  w.out.str("");
  REQUIRE(cmd_run(w.g, w.env) == kOk);
  CHECK(counting->generate_calls.load() == 0);
  CHECK(w.out.str().find("18 done") != std::string::npos);
  CHECK(testing::snapshot_tree(w.layout().run_dir() / "reconstructions") == before);
}

TEST_CASE("an interrupted run finishes on the next invocation") {
  Workspace w;
  REQUIRE(cmd_sample(w.g, w.env) == kOk);
  std::atomic<bool> stop{true};
  w.env.stop = &stop;
  CHECK(cmd_run(w.g, w.env) == kPartial);
  CHECK(w.err.str().find("interrupted") != std::string::npos);
  w.env.stop = nullptr;
  w.out.str("");
  CHECK(cmd_run(w.g, w.env) == kOk);
  CHECK(w.out.str().find("18 done") != std::string::npos);
}

TEST_CASE("failed items warn, and fail only under --strict") {
  Workspace w;
  REQUIRE(cmd_sample(w.g, w.env) == kOk);
  auto scripted = std::make_shared<testing::ScriptedBackend>();
  scripted->set_fallback([](const provider::GenerationRequest&) -> provider::GenerationResponse {
    throw provider::ProviderError(400, "bad request");
  });
  w.env.backend = scripted;
  CHECK(cmd_run(w.g, w.env) == kOk);
  CHECK(w.err.str().find("failed") != std::string::npos);
  GlobalOptions strict = w.g;
  strict.strict = true;
  strict.cache_dir = w.dir / "fresh_cache";
  CHECK(cmd_run(strict, w.env) == kPartial);
}
