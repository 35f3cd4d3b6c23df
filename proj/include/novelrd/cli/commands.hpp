#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "novelrd/corpus.hpp"
#include "novelrd/metrics.hpp"
#include "novelrd/pipeline/templates.hpp"
#include "novelrd/provider/backend.hpp"
#include "novelrd/provider/types.hpp"

namespace novelrd::cli {

enum ExitCode : int { kOk = 0, kPartial = 1, kConfigError = 2 };

/// Contents of a run configuration file. Relative paths are resolved against
/// the file's directory.
struct RunConfig {
  std::filesystem::path corpus_manifest;
  provider::ProviderConfig provider;
  std::vector<std::string> config_ids = {"C", "K2-*", "K2-1"};
  std::optional<std::filesystem::path> grid_file;
  nlohmann::json extra_configs = nlohmann::json::array();
  std::uint64_t seed = 42;
  UnitMode unit_mode = UnitMode::Mixed;
  pipeline::Language language = pipeline::Language::Zh;
  std::optional<std::filesystem::path> templates_dir;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache_dir;  ///< defaults to <output_dir>/cache
  std::int64_t chapter_units = 5000;
  std::int64_t sample_n = 40;
  int chapters_per_novel = 8;
  std::map<Genre, double> S_h;
  std::optional<std::int64_t> min_units;
  metrics::CompositeOptions composite;
  std::string significance_metric = "d_total";
  bool pooled = false;
  bool bonferroni = false;
  bool novel_means = false;
  bool mock = false;

  std::filesystem::path cache_path() const { return cache_dir.value_or(output_dir / "cache"); }
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Global command-line flags.
struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  bool strict = false;
  std::optional<std::filesystem::path> cache_dir;
};

/// Process-level hooks, overridable in tests.
struct CommandEnv {
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  /// Replaces the configured backend (mock or HTTP) when set.
  std::shared_ptr<provider::Backend> backend;
  const std::atomic<bool>* stop = nullptr;
};

/// Resolved configuration: the file (or defaults) with global flags applied.
RunConfig resolve_config(const GlobalOptions& g);

int cmd_ingest(const GlobalOptions& g, CommandEnv& env,
               const std::optional<std::filesystem::path>& manifest = std::nullopt);
int cmd_sample(const GlobalOptions& g, CommandEnv& env);
int cmd_run(const GlobalOptions& g, CommandEnv& env);
int cmd_evaluate(const GlobalOptions& g, CommandEnv& env);
int cmd_report(const GlobalOptions& g, CommandEnv& env);
int cmd_verify(const GlobalOptions& g, CommandEnv& env);

/// Output locations under RunConfig::output_dir.
struct Layout {
  std::filesystem::path root;
  std::filesystem::path corpus_index() const { return root / "corpus_index.json"; }
  std::filesystem::path sample_spec() const { return root / "sample_spec.json"; }
  std::filesystem::path run_dir() const { return root / "run"; }
  std::filesystem::path metrics() const { return root / "metrics.jsonl"; }
  std::filesystem::path report_dir() const { return root / "report"; }
};

}  // namespace novelrd::cli
