#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace novelrd::pipeline {

/// Exact positive rational parsed from a decimal literal such as "0.05".
/// Products of ratios stay exact, so R never picks up binary rounding.
class Ratio {
 public:
  Ratio() = default;
  Ratio(std::int64_t num, std::int64_t den);

  static Ratio parse(std::string_view decimal);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  /// Shortest decimal rendering when the denominator is a power of ten, else "num/den".
  std::string str() const;

  /// ceil(ratio * units) in integer arithmetic.
  std::int64_t scale_ceil(std::int64_t units) const;

  Ratio operator*(const Ratio& other) const;
  bool operator==(const Ratio&) const = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

enum class Variant { SingleStage, HierarchicalTwoStage, MixedTwoStage, LongWriterBaseline };
Variant parse_variant(std::string_view name);
std::string_view to_string(Variant v);

struct PipelineConfig {
  std::string id;
  Variant variant = Variant::SingleStage;
  std::vector<Ratio> alphas;
  bool stage1_structured = false;

  int K() const noexcept { return static_cast<int>(alphas.size()); }
  Ratio R_exact() const;
  /// Throws ConfigError when K, the variant and the alphas disagree.
  void validate() const;
};

/// R = product of the per-level ratios.
double compute_R(const PipelineConfig& config);

struct GridEntry {
  PipelineConfig config;
  std::string printed_r;   ///< R as printed in the published summary table
  bool supported = true;
  std::string note;
};

/// Registry of the named experiment configurations.
class ConfigGrid {
 public:
  static ConfigGrid embedded();
  static ConfigGrid from_file(const std::filesystem::path& path);
  static ConfigGrid parse(std::string_view json_text);

  const std::vector<GridEntry>& entries() const noexcept { return entries_; }
  const GridEntry& find(std::string_view id) const;
  bool contains(std::string_view id) const;
  /// Adds or replaces an entry.
  void add(GridEntry entry);

 private:
  std::vector<GridEntry> entries_;
};

GridEntry grid_entry_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridEntry& e);

}  // namespace novelrd::pipeline
