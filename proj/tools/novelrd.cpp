#include <atomic>
#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "novelrd/cli/commands.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  using namespace novelrd::cli;

  CLI::App app{"Compression-expansion distortion experiments on long novels"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::string config_path, cache_dir;
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config_path, "run configuration JSON")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master RNG seed");
  app.add_flag("--mock", g.mock, "use the deterministic offline provider");
  app.add_flag("--strict", g.strict, "exit 1 when any item fails");
  auto* cache_opt = app.add_option("--cache-dir", cache_dir, "response cache directory");
  for (auto* o : {config_opt, seed_opt, cache_opt}) o->configurable(false);
  app.fallthrough();

  std::string manifest;
  auto* ingest = app.add_subcommand("ingest", "load the corpus and write the chapter index");
  ingest->add_option("manifest", manifest, "corpus manifest (overrides the config)");
  auto* sample = app.add_subcommand("sample", "draw the stratified novel and chapter sample");
  auto* run = app.add_subcommand("run", "compress and expand the sampled chapters");
  auto* evaluate = app.add_subcommand("evaluate", "score reconstructions against the originals");
  auto* report = app.add_subcommand("report", "aggregate metrics into tables, tests and figures");
  auto* verify = app.add_subcommand("verify", "recompute reported values and check provenance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  if (!config_path.empty()) g.config = config_path;
  if (seed_opt->count() > 0) g.seed = seed;
  if (!cache_dir.empty()) g.cache_dir = cache_dir;

  std::signal(SIGINT, on_sigint);
  CommandEnv env;
  env.stop = &g_stop;

  if (ingest->parsed()) {
    std::optional<std::filesystem::path> m;
    if (!manifest.empty()) m = manifest;
    return cmd_ingest(g, env, m);
  }
  if (sample->parsed()) return cmd_sample(g, env);
  if (run->parsed()) return cmd_run(g, env);
  if (evaluate->parsed()) return cmd_evaluate(g, env);
  if (report->parsed()) return cmd_report(g, env);
  if (verify->parsed()) return cmd_verify(g, env);
  return kConfigError;
}
