#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "novelrd/metrics.hpp"
#include "novelrd/pipeline/config.hpp"
#include "novelrd/stats.hpp"

namespace novelrd::report {

/// One evaluated (config, novel, chapter).
struct MetricRecord {
  std::string config_id;
  std::string novel_id;
  std::string genre;
  int chapter_index = 0;
  double R = 0.0;
  metrics::SimilarityReport report;
  metrics::DistortionComposite composite;
  std::vector<std::string> warnings;
  std::string judge_error;
};

nlohmann::json to_json(const MetricRecord& r);
MetricRecord record_from_json(const nlohmann::json& j);

std::vector<MetricRecord> read_metric_records(const std::filesystem::path& path);
void write_metric_records(const std::filesystem::path& path, const std::vector<MetricRecord>& records);

/// Per-chapter samples for every metric a record carries. Judge-derived
/// metrics are absent from partial records.
std::vector<stats::MetricSample> samples_of(const std::vector<MetricRecord>& records);
/// Collapse chapter samples to one mean per (config, novel, metric).
std::vector<stats::MetricSample> novel_means(const std::vector<stats::MetricSample>& samples);

struct SummaryColumn {
  std::string header;
  std::string metric;
};
/// The summary table's value columns, in order.
const std::vector<SummaryColumn>& summary_columns();

/// RFC 4180 field quoting.
std::string csv_field(std::string_view s);

struct ReportOptions {
  stats::SignificanceOptions significance;
  bool novel_means = false;
  std::vector<std::string> excluded = {"B", "D"};
};

struct ReportBundle {
  std::string summary_csv;
  std::string groups_json;
  std::string significance_json;
  std::string significance_csv;
  std::string correlation_json;
  std::string scatter_csv;
  std::string r_grid_csv;
  std::string scatter_svg;
  std::string heatmap_svg;
  std::vector<std::string> warnings;
};

/// Settings in order of first appearance among the records.
std::vector<std::string> setting_order(const std::vector<MetricRecord>& records);

std::string summary_csv(const std::vector<MetricRecord>& records);
std::string scatter_csv(const std::vector<MetricRecord>& records,
                        const std::vector<std::string>& excluded);
/// Computed R next to the printed R for every grid entry.
std::string r_grid_csv(const pipeline::ConfigGrid& grid);
std::string scatter_svg(const std::vector<MetricRecord>& records,
                        const std::vector<std::string>& excluded);
std::string heatmap_svg(const stats::SignificanceMatrix& m);

/// Throws DomainError for an empty record set.
ReportBundle build_report(const std::vector<MetricRecord>& records, const pipeline::ConfigGrid& grid,
                          const ReportOptions& options = {});
void write_report(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace novelrd::report
