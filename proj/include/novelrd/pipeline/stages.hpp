#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "novelrd/corpus.hpp"
#include "novelrd/pipeline/chapter_detail.hpp"
#include "novelrd/pipeline/config.hpp"
#include "novelrd/pipeline/templates.hpp"
#include "novelrd/provider/client.hpp"

namespace novelrd::pipeline {

/// Everything a stage needs besides its inputs.
struct PipelineContext {
  provider::ProviderClient* client = nullptr;
  const TemplateSet* templates = nullptr;
  Language language = Language::Zh;
  UnitMode unit_mode = UnitMode::Mixed;
  std::uint64_t seed = 0;
  int parallelism = 1;            ///< concurrent per-chapter calls within a stage
  double length_tolerance = 0.2;  ///< relative band on requested lengths
};

enum class OutlineKind { Direct, Details, Summaries, Sectioned };
std::string_view to_string(OutlineKind k);

/// One compression level's product.
struct OutlineArtifact {
  int level = 1;
  OutlineKind kind = OutlineKind::Direct;
  std::string config_id;
  std::string text;                       ///< rendered outline as shown to the next prompt
  std::vector<ChapterSection> sections;   ///< per-chapter bodies, empty for Direct
  std::vector<ChapterDetail> details;     ///< one per source chapter for Details
  nlohmann::json sidecar = nlohmann::json::object();  ///< unknown detail keys by chapter
  std::int64_t unit_count = 0;            ///< content units, chapter markers excluded
  std::int64_t input_units = 0;
  std::int64_t target_units = 0;
  std::string source_hash;                ///< sha256 of the level-(i-1) input
  std::string last_chapter_title;         ///< Direct only; not part of unit_count
  std::vector<std::string> flags;
  std::vector<provider::CacheKey> provenance;
};

nlohmann::json to_json(const OutlineArtifact& a);
OutlineArtifact artifact_from_json(const nlohmann::json& j);

struct ReconstructionResult {
  std::string config_id;
  std::string novel_id;
  int chapter_index = 0;
  std::string reconstructed_text;
  std::int64_t unit_count = 0;
  std::int64_t min_units = 0;
  std::vector<std::string> artifacts;  ///< artifact references, "<config>/<novel>/level<k>"
  std::vector<provider::CacheKey> provenance;
  std::optional<ChapterDetail> intermediate;  ///< hierarchical expansion only
  std::vector<std::string> flags;
};

nlohmann::json to_json(const ReconstructionResult& r);
ReconstructionResult reconstruction_from_json(const nlohmann::json& j);

/// Level-1 outline, one entry per chapter, each requested at ceil(alpha1 * units).
OutlineArtifact compress_stage1(const std::vector<Chapter>& chapters, const Ratio& alpha1,
                                bool structured, const PipelineContext& ctx);

/// Level-2 "第N章：" outline at about alpha2 * L1 units.
OutlineArtifact compress_stage2(const OutlineArtifact& stage1, const Ratio& alpha2,
                                const PipelineContext& ctx);

/// Whole-novel outline of at most target_units plus the recorded last-chapter title.
OutlineArtifact compress_direct(const Novel& novel, std::int64_t target_units,
                                const PipelineContext& ctx);

/// Reconstruct chapter `chapter_index` of `chapters` from `outline`.
ReconstructionResult expand_to_chapter(const OutlineArtifact& outline,
                                       const std::vector<Chapter>& chapters, int chapter_index,
                                       std::int64_t min_units, Variant variant,
                                       const PipelineContext& ctx);

/// Splits "...\n最后一章标题：X" style trailers off a direct outline.
/// Returns the outline without the trailer and the title (empty if absent).
std::pair<std::string, std::string> split_last_title(std::string_view text);

}  // namespace novelrd::pipeline
