#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "novelrd/corpus.hpp"
#include "novelrd/pipeline/config.hpp"
#include "novelrd/pipeline/stages.hpp"

namespace novelrd::pipeline {

enum class ItemStatus { Done, Failed, Skipped };
std::string_view to_string(ItemStatus s);

struct ItemKey {
  std::string config_id;
  std::string novel_id;
  int chapter_index = 0;
  auto operator<=>(const ItemKey&) const = default;
};

struct ItemRecord {
  ItemKey key;
  ItemStatus status = ItemStatus::Done;
  std::string error;
  std::vector<std::string> flags;
};

/// Output directory of one run: an append-only JSON-lines manifest plus
/// artifact and reconstruction files.
///
///   <dir>/manifest.jsonl
///   <dir>/artifacts/<config>/<novel>/level<k>.json
///   <dir>/reconstructions/<config>/<novel>/chapter_<i>.json
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path manifest_path() const { return dir_ / "manifest.jsonl"; }

  /// Appends one event line and flushes it. Thread-safe.
  void append(const nlohmann::json& event);
  std::vector<nlohmann::json> events() const;
  /// Latest status per item, replayed from the manifest.
  std::map<ItemKey, ItemRecord> item_states() const;

  std::string write_artifact(const OutlineArtifact& artifact, const std::string& novel_id);
  void write_reconstruction(const ReconstructionResult& r);
  ReconstructionResult read_reconstruction(const ItemKey& key) const;
  /// All reconstructions marked done in the manifest, in (config, novel, chapter) order.
  std::vector<ReconstructionResult> done_reconstructions() const;

  static std::string artifact_ref(const std::string& config_id, const std::string& novel_id, int level);

 private:
  std::filesystem::path reconstruction_path(const ItemKey& key) const;

  std::filesystem::path dir_;
  mutable std::mutex mu_;
};

/// Path-safe spelling of a config or novel id ("K2-*" -> "K2-star").
std::string safe_component(std::string_view id);

struct PipelineRun {
  std::vector<ReconstructionResult> results;  ///< successful items, in sampled order
  std::vector<ItemRecord> items;              ///< every sampled item, in sampled order
  std::vector<OutlineArtifact> artifacts;
};

struct RunOptions {
  /// Expansion length floor; defaults to each source chapter's unit count.
  std::optional<std::int64_t> min_units;
  /// Skip items the store already records as done.
  bool resume = true;
  /// Checked between items; set from a signal handler to stop scheduling work.
  const std::atomic<bool>* stop = nullptr;
};

/// Compresses the novel once for `config`, then expands every sampled chapter
/// (in parallel up to ctx.parallelism). Item failures are recorded, not thrown.
PipelineRun run_pipeline(const PipelineConfig& config, const Novel& novel,
                         const std::vector<Chapter>& chapters, const std::vector<int>& sampled,
                         const PipelineContext& ctx, RunStore* store = nullptr,
                         const RunOptions& options = {});

/// Level-1 (and level-2) outlines for a config, without any expansion.
std::vector<OutlineArtifact> compress_for(const PipelineConfig& config, const Novel& novel,
                                          const std::vector<Chapter>& chapters,
                                          const PipelineContext& ctx);

}  // namespace novelrd::pipeline
