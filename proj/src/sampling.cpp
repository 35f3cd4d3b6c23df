#include "novelrd/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"

namespace novelrd::sampling {

using nlohmann::json;

namespace {

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, bound) by rejection, free of modulo bias.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r < limit) return r % bound;
  }
}

/// Largest-remainder rounding of `quotas` to integers summing to `total`.
std::vector<std::int64_t> hamilton(const std::vector<double>& quotas, std::int64_t total) {
  std::vector<std::int64_t> out(quotas.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    out[i] = static_cast<std::int64_t>(std::floor(quotas[i]));
    assigned += out[i];
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a] - std::floor(quotas[a]) > quotas[b] - std::floor(quotas[b]);
  });
  for (std::size_t k = 0; assigned < total && k < order.size(); ++k, ++assigned) ++out[order[k]];
  return out;
}

}  // namespace

AllocationPlan neyman_allocate(std::int64_t n, const std::vector<Stratum>& strata) {
  if (n < 0) throw DomainError("neyman_allocate: negative sample size");
  if (strata.empty()) throw DomainError("neyman_allocate: no strata");
  std::int64_t population = 0;
  double weight_total = 0.0;
  for (const auto& s : strata) {
    if (!(s.S_h > 0.0) || !std::isfinite(s.S_h)) {
      throw DomainError("neyman_allocate: S_h must be positive");
    }
    population += s.N();
    weight_total += static_cast<double>(s.N()) * s.S_h;
  }
  if (population < n) {
    throw DomainError("infeasible sample: n = " + std::to_string(n) + " exceeds the " +
                      std::to_string(population) + " available units");
  }

  AllocationPlan plan;
  plan.n = n;
  plan.n_h.assign(strata.size(), 0);
  for (const auto& s : strata) {
    plan.shares.push_back(weight_total > 0.0 ? static_cast<double>(s.N()) * s.S_h / weight_total : 0.0);
  }
  if (n == 0) return plan;

  std::vector<bool> capped(strata.size(), false);
  std::int64_t remaining = n;
  for (;;) {
    double w = 0.0;
    for (std::size_t i = 0; i < strata.size(); ++i) {
      if (!capped[i]) w += static_cast<double>(strata[i].N()) * strata[i].S_h;
    }
    std::vector<double> quotas(strata.size(), 0.0);
    bool newly_capped = false;
    for (std::size_t i = 0; i < strata.size(); ++i) {
      if (capped[i]) continue;
      quotas[i] = static_cast<double>(remaining) * static_cast<double>(strata[i].N()) * strata[i].S_h / w;
      if (quotas[i] > static_cast<double>(strata[i].N())) {
        capped[i] = true;
        plan.n_h[i] = strata[i].N();
        remaining -= strata[i].N();
        newly_capped = true;
      }
    }
    if (newly_capped) continue;
    const auto rounded = hamilton(quotas, remaining);
    for (std::size_t i = 0; i < strata.size(); ++i) {
      if (!capped[i]) plan.n_h[i] = rounded[i];
    }
    break;
  }
  return plan;
}

std::vector<std::string> pps_sample(const Stratum& stratum, std::int64_t n_h, std::uint64_t seed) {
  const std::int64_t N = stratum.N();
  if (n_h < 0) throw DomainError("pps_sample: negative sample size");
  if (n_h > N) {
    throw DomainError("pps_sample: n_h = " + std::to_string(n_h) + " exceeds stratum size " +
                      std::to_string(N));
  }
  for (const auto& [id, size] : stratum.population) {
    if (size <= 0) throw DomainError("pps_sample: size of " + id + " must be positive");
  }
  std::vector<bool> chosen(static_cast<std::size_t>(N), false);
  if (n_h == N) {
    chosen.assign(chosen.size(), true);
  } else if (n_h > 0) {
    std::int64_t k = n_h;
    // Certainty selections: repeat until no remaining unit reaches the step.
    for (bool changed = true; changed && k > 0;) {
      changed = false;
      double total = 0.0;
      for (std::int64_t i = 0; i < N; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) total += static_cast<double>(stratum.population[static_cast<std::size_t>(i)].second);
      }
      const double step = total / static_cast<double>(k);
      for (std::int64_t i = 0; i < N && k > 0; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (!chosen[idx] && static_cast<double>(stratum.population[idx].second) >= step) {
          chosen[idx] = true;
          --k;
          changed = true;
        }
      }
    }
    if (k > 0) {
      std::vector<std::size_t> rest;
      double total = 0.0;
      for (std::size_t i = 0; i < chosen.size(); ++i) {
        if (!chosen[i]) {
          rest.push_back(i);
          total += static_cast<double>(stratum.population[i].second);
        }
      }
      std::mt19937_64 rng(seed);
      const double step = total / static_cast<double>(k);
      const double start = uniform01(rng) * step;
      double cum = 0.0;
      std::int64_t j = 0;
      for (std::size_t r = 0; r < rest.size() && j < k; ++r) {
        cum += static_cast<double>(stratum.population[rest[r]].second);
        const double point = start + static_cast<double>(j) * step;
        if (point < cum) {
          chosen[rest[r]] = true;
          ++j;
        }
      }
      // Rounding can leave the last point a hair past the final boundary.
      for (std::size_t r = rest.size(); j < k && r-- > 0;) {
        if (!chosen[rest[r]]) {
          chosen[rest[r]] = true;
          ++j;
        }
      }
    }
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i]) out.push_back(stratum.population[i].first);
  }
  return out;
}

std::vector<int> srswor_chapters(int chapter_count, int m, std::uint64_t seed) {
  if (chapter_count < 1) throw DomainError("srswor_chapters: chapter_count must be at least 1");
  if (m < 1) throw DomainError("srswor_chapters: m must be at least 1");
  std::vector<int> pool(static_cast<std::size_t>(chapter_count));
  std::iota(pool.begin(), pool.end(), 1);
  const int take = std::min(m, chapter_count);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < take; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   uniform_below(rng, static_cast<std::uint64_t>(chapter_count - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(take));
  std::sort(pool.begin(), pool.end());
  return pool;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x = 0.0;
  if (p < lo) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - lo) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against the exact CDF.
  const double e = p > 0.5 ? (1.0 - p) - 0.5 * std::erfc(x / std::sqrt(2.0))
                           : 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

std::pair<double, double> fisher_ci(double r, std::int64_t n, double confidence) {
  if (!(std::abs(r) < 1.0)) throw DomainError("fisher_ci: |r| must be below 1");
  if (n < 4) throw DomainError("fisher_ci: n must be at least 4");
  if (!(confidence >= 0.0 && confidence < 1.0)) {
    throw DomainError("fisher_ci: confidence must lie in [0, 1)");
  }
  const double z = std::atanh(r);
  const double se = 1.0 / std::sqrt(static_cast<double>(n - 3));
  const double zc = confidence == 0.0 ? 0.0 : normal_quantile(0.5 + confidence / 2.0);
  return {std::tanh(z - zc * se), std::tanh(z + zc * se)};
}

json to_json(const SampleSpec& s) {
  json strata = json::array();
  for (const auto& st : s.strata) {
    strata.push_back({{"genre", to_string(st.genre)},
                      {"N_h", st.N_h},
                      {"S_h", st.S_h},
                      {"n_h", st.n_h}});
  }
  json novels = json::array();
  for (const auto& nv : s.novels) {
    novels.push_back({{"id", nv.id}, {"genre", to_string(nv.genre)}, {"chapters", nv.chapters}});
  }
  return json{{"seed", s.seed},
              {"n", s.n},
              {"chapters_per_novel", s.chapters_per_novel},
              {"strata", strata},
              {"novels", novels}};
}

SampleSpec sample_spec_from_json(const json& j) {
  SampleSpec s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.n = j.value("n", std::int64_t{0});
    s.chapters_per_novel = j.value("chapters_per_novel", 8);
    for (const auto& st : j.value("strata", json::array())) {
      s.strata.push_back({parse_genre(st.at("genre").get<std::string>()),
                          st.at("N_h").get<std::int64_t>(), st.at("S_h").get<double>(),
                          st.at("n_h").get<std::int64_t>()});
    }
    for (const auto& nv : j.at("novels")) {
      s.novels.push_back({nv.at("id").get<std::string>(),
                          parse_genre(nv.at("genre").get<std::string>()),
                          nv.at("chapters").get<std::vector<int>>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed sample spec: ") + e.what());
  }
  return s;
}

SampleSpec build_sample_spec(const std::vector<Novel>& novels,
                             const std::map<std::string, int>& chapter_counts, std::int64_t n,
                             std::uint64_t seed, int chapters_per_novel,
                             const std::map<Genre, double>& S_h) {
  std::vector<Stratum> strata;
  for (Genre g : kAllGenres) {
    Stratum s;
    s.genre = g;
    if (auto it = S_h.find(g); it != S_h.end()) s.S_h = it->second;
    for (const auto& nv : novels) {
      if (nv.genre() == g) s.population.emplace_back(nv.id(), nv.unit_count());
    }
    strata.push_back(std::move(s));
  }
  const auto plan = neyman_allocate(n, strata);

  SampleSpec spec;
  spec.seed = seed;
  spec.n = n;
  spec.chapters_per_novel = chapters_per_novel;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    spec.strata.push_back({strata[i].genre, strata[i].N(), strata[i].S_h, plan.n_h[i]});
    const auto chosen = pps_sample(strata[i], plan.n_h[i],
                                   derive_seed(seed, "pps/" + std::string(to_string(strata[i].genre))));
    for (const auto& id : chosen) {
      const auto it = chapter_counts.find(id);
      if (it == chapter_counts.end()) throw ConfigError("no chapter count for novel " + id);
      spec.novels.push_back(
          {id, strata[i].genre,
           srswor_chapters(it->second, chapters_per_novel, derive_seed(seed, "srswor/" + id))});
    }
  }
  return spec;
}

}  // namespace novelrd::sampling
