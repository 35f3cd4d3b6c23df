#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace novelrd::stats {

/// Compensated (Neumaier) sum.
double neumaier_sum(const std::vector<double>& xs);

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);
/// Student-t CDF with `dof` degrees of freedom (dof > 0, may be fractional).
double student_t_cdf(double t, double dof);
/// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided_p(double t, double dof);

/// "***" for p < 0.001, "**" for p < 0.01, "*" for p < 0.05, else "".
std::string stars(double p);
/// Six significant digits; values below 1e-300 render as "<1e-300".
std::string format_p(double p);

struct MetricSample {
  std::string config_id;
  std::string novel_id;
  int chapter_index = 0;
  std::string metric;
  double value = 0.0;
};

struct GroupSummary {
  std::string config_id;
  std::string metric;
  std::int64_t n = 0;
  double mean = 0.0;
  double std = 0.0;        ///< sample standard deviation, divisor n - 1
  bool singleton = false;  ///< n == 1, std reported as 0
};

/// One summary per (config, metric), ordered by config id then metric.
/// Throws DomainError on an empty input, non-finite values or duplicate keys.
std::vector<GroupSummary> group_summary(const std::vector<MetricSample>& samples);

struct TTestResult {
  std::string a_id;
  std::string b_id;
  std::string metric;
  std::int64_t n_a = 0;
  std::int64_t n_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t = 0.0;    ///< sign convention: a minus b
  double dof = 0.0;
  double p = 1.0;
  std::string stars;
  std::string flag;  ///< "", "constant" (both samples constant and equal) or "degenerate"
};

/// Welch's unequal-variance t-test (pooled Student t when `pooled`).
/// Requires at least two values per sample.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b,
                         bool pooled = false);

struct CorrelationResult {
  std::string x_name;
  std::string y_name;
  double r = 0.0;
  double p = 1.0;
  std::int64_t n = 0;
};

/// Sample correlation with p from t = r sqrt((n-2)/(1-r^2)) on n-2 dof.
CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y);

struct SignificanceOptions {
  std::string metric = "d_total";
  bool pooled = false;
  bool bonferroni = false;
};

struct SignificanceMatrix {
  std::string metric;
  std::vector<std::string> ids;
  /// cells[i][j] compares ids[i] (minus) ids[j]; empty on the diagonal and
  /// for untestable groups.
  std::vector<std::vector<std::optional<TTestResult>>> cells;
  std::vector<bool> untestable;  ///< fewer than two samples
  std::string correction = "none";
  bool pooled = false;
  std::int64_t comparisons = 0;
};

SignificanceMatrix significance_matrix(
    const std::vector<std::pair<std::string, std::vector<double>>>& groups,
    const SignificanceOptions& options = {});

nlohmann::json to_json(const SignificanceMatrix& m);
/// Square CSV: header row of ids, one row per id, cells "<p> <stars>".
std::string to_csv(const SignificanceMatrix& m);

struct RSample {
  std::string config_id;
  double R = 0.0;
  double similarity = 0.0;  ///< mean of the five judge dimensions
};

/// Pearson r between R and mean similarity, leaving out the excluded groups.
CorrelationResult r_similarity_correlation(const std::vector<RSample>& samples,
                                           const std::vector<std::string>& excluded = {"B", "D"});

nlohmann::json to_json(const CorrelationResult& c);
nlohmann::json to_json(const TTestResult& t);

}  // namespace novelrd::stats
