#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace novelrd::pipeline {

enum class Language { Zh, En };
Language parse_language(std::string_view name);
std::string_view to_string(Language lang);

enum class TemplateId {
  LongWriterExpand,    ///< LongWriter baseline chapter writing
  Stage1Extract,       ///< per-chapter structured extraction (JSON detail)
  Stage1Summary,       ///< per-chapter free-text summary
  Stage2Compress,      ///< detailed outline -> global outline
  Stage2ExpandDetail,  ///< global outline -> one chapter's structured detail
  DirectCompress,      ///< whole novel -> outline
  DirectExpand,        ///< outline -> chapter prose
  Judge,               ///< LLM-as-judge comparison
  JsonRepair,          ///< suffix appended when re-asking for raw JSON
};

std::string_view file_stem(TemplateId id);

using Bindings = std::map<std::string, std::string>;

/// Substitute every `{name}` placeholder in one pass. Throws ConfigError if
/// a placeholder has no binding. Substituted text is never re-scanned.
std::string render_template(std::string_view tmpl, const Bindings& bindings);

/// Prompt templates for both languages, either compiled in or read from a
/// directory laid out as <dir>/<lang>/<stem>.txt.
class TemplateSet {
 public:
  static TemplateSet embedded();
  static TemplateSet from_directory(const std::filesystem::path& dir);

  /// Template text without the file's trailing newline.
  std::string_view get(TemplateId id, Language lang) const;
  std::string render(TemplateId id, Language lang, const Bindings& bindings) const;
  /// Content hash over every template.
  const std::string& version() const noexcept { return version_; }

 private:
  std::map<std::string, std::string> texts_;
  std::string version_;
};

}  // namespace novelrd::pipeline
