#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "novelrd/corpus.hpp"

namespace novelrd::sampling {

struct Stratum {
  Genre genre = Genre::Urban;
  std::vector<std::pair<std::string, std::int64_t>> population;  ///< (novel id, size)
  double S_h = 1.0;  ///< estimated distortion standard deviation

  std::int64_t N() const noexcept { return static_cast<std::int64_t>(population.size()); }
};

struct AllocationPlan {
  std::int64_t n = 0;
  std::vector<std::int64_t> n_h;
  std::vector<double> shares;  ///< N_h S_h / sum_g N_g S_g, before capping and rounding
};

/// Neyman allocation rounded by largest remainder (ties go to the earlier
/// stratum). Strata that would exceed N_h are capped and the excess
/// reallocated among the rest by the same rule.
AllocationPlan neyman_allocate(std::int64_t n, const std::vector<Stratum>& strata);

/// Systematic PPS without replacement. Units whose size reaches the sampling
/// step are taken with certainty first; the rest get one random start.
/// Selected ids are returned in population order.
std::vector<std::string> pps_sample(const Stratum& stratum, std::int64_t n_h, std::uint64_t seed);

/// min(m, chapter_count) distinct 1-based chapter indexes, ascending.
std::vector<int> srswor_chapters(int chapter_count, int m, std::uint64_t seed);

/// Standard normal quantile (Acklam's rational approximation with one Halley step).
double normal_quantile(double p);

/// Fisher z interval: tanh(atanh(r) -/+ z_crit / sqrt(n - 3)).
std::pair<double, double> fisher_ci(double r, std::int64_t n, double confidence);

struct SampledNovel {
  std::string id;
  Genre genre = Genre::Urban;
  std::vector<int> chapters;
};

struct StratumSummary {
  Genre genre = Genre::Urban;
  std::int64_t N_h = 0;
  double S_h = 1.0;
  std::int64_t n_h = 0;
};

struct SampleSpec {
  std::uint64_t seed = 0;
  std::int64_t n = 0;
  int chapters_per_novel = 8;
  std::vector<StratumSummary> strata;
  std::vector<SampledNovel> novels;
};

nlohmann::json to_json(const SampleSpec& s);
SampleSpec sample_spec_from_json(const nlohmann::json& j);

/// Two-stage design: Neyman-allocated PPS selection of novels within genre
/// strata, then SRSWOR of chapters within each selected novel.
/// `chapter_counts` maps novel id to its chapter count; `S_h` defaults to 1.
SampleSpec build_sample_spec(const std::vector<Novel>& novels,
                             const std::map<std::string, int>& chapter_counts, std::int64_t n,
                             std::uint64_t seed, int chapters_per_novel = 8,
                             const std::map<Genre, double>& S_h = {});

}  // namespace novelrd::sampling
