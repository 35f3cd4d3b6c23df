#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <limits>

#include "novelrd/error.hpp"
#include "novelrd/stats.hpp"
#include "oracles.hpp"

using namespace novelrd;
using namespace novelrd::stats;
using Catch::Approx;
namespace ref = novelrd::testing;

TEST_CASE("incomplete beta agrees with Boost") {
  for (double a : {0.5, 1.0, 2.5, 10.0, 40.0}) {
    for (double b : {0.5, 1.0, 3.0, 25.0}) {
      for (double x : {0.0, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0}) {
        CHECK(incomplete_beta(a, b, x) == Approx(boost::math::ibeta(a, b, x)).margin(1e-12));
      }
    }
  }
}

TEST_CASE("Student-t tails agree with Boost") {
  for (double dof : {1.0, 2.0, 3.7, 10.0, 58.3, 500.0}) {
    for (double t : {-8.0, -2.1, -0.3, 0.0, 0.4, 1.96, 5.0, 30.0}) {
      CHECK(student_t_two_sided_p(t, dof) == Approx(ref::ref_two_sided_p(t, dof)).margin(1e-12));
      const boost::math::students_t dist(dof);
      CHECK(student_t_cdf(t, dof) == Approx(boost::math::cdf(dist, t)).margin(1e-12));
    }
  }
}

TEST_CASE("Welch and pooled tests agree with the reference") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 20; ++i) {
    const auto a = ref::normal_sample(rng, 5 + i, 0.5, 0.1 + 0.01 * i);
    const auto b = ref::normal_sample(rng, 8 + (i % 5), 0.45, 0.2);
    for (bool pooled : {false, true}) {
      const auto got = welch_t_test(a, b, pooled);
      const auto want = ref::ref_t_test(a, b, pooled);
      CHECK(got.t == Approx(want.t).epsilon(1e-10));
      CHECK(got.dof == Approx(want.dof).epsilon(1e-10));
      CHECK(std::fabs(got.p - want.p) <= 1e-6);
      CHECK(got.stars == ref::ref_stars(got.p));
    }
  }
}

TEST_CASE("t-test edge cases") {
  const auto constant = welch_t_test({1, 1, 1}, {1, 1});
  CHECK(constant.t == 0.0);
  CHECK(constant.p == 1.0);
  CHECK(constant.flag == "constant");
  const auto degenerate = welch_t_test({1, 1, 1}, {2, 2});
  CHECK(degenerate.t == -std::numeric_limits<double>::infinity());
  CHECK(degenerate.p == 0.0);
  CHECK(degenerate.flag == "degenerate");
  CHECK(degenerate.stars == "***");
  CHECK_THROWS_AS(welch_t_test({1}, {1, 2}), DomainError);
  CHECK_THROWS_AS(welch_t_test({1, std::nan("")}, {1, 2}), DomainError);
}

TEST_CASE("Pearson agrees with the reference") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const int n = 6 + i;
    const auto x = ref::normal_sample(rng, n, 0, 1);
    auto y = ref::normal_sample(rng, n, 0, 1);
    for (int k = 0; k < n; ++k) y[static_cast<std::size_t>(k)] += 0.1 * i * x[static_cast<std::size_t>(k)];
    const auto got = pearson(x, y);
    const auto want = ref::ref_pearson(x, y);
    CHECK(std::fabs(got.r - want.r) <= 1e-9);
    CHECK(std::fabs(got.p - want.p) <= 1e-6);
    CHECK(got.n == n);
  }
  CHECK(pearson({1, 2, 3}, {2, 4, 6}).r == Approx(1.0));
  CHECK(pearson({1, 2, 3}, {2, 4, 6}).p == 0.0);
  CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), DomainError);
  CHECK_THROWS_AS(pearson({1, 2}, {1, 2}), DomainError);
  CHECK_THROWS_AS(pearson({1, 2, 3}, {1, 2}), DomainError);
}

TEST_CASE("star thresholds are strict") {
  CHECK(stars(0.05) == "");
  CHECK(stars(std::nextafter(0.05, 0.0)) == "*");
  CHECK(stars(0.01) == "*");
  CHECK(stars(std::nextafter(0.01, 0.0)) == "**");
  CHECK(stars(0.001) == "**");
  CHECK(stars(std::nextafter(0.001, 0.0)) == "***");
  CHECK(stars(0.0) == "***");
  CHECK(stars(1.0) == "");
}

TEST_CASE("p-value formatting") {
  CHECK(format_p(0.0) == "<1e-300");
  CHECK(format_p(0.0123456789) == "0.0123457");
  CHECK(format_p(1.0) == "1");
}

TEST_CASE("compensated sums") {
  CHECK(neumaier_sum({1e100, 1.0, -1e100}) == 1.0);
  CHECK(neumaier_sum({}) == 0.0);
}

TEST_CASE("group summaries") {
  std::vector<MetricSample> s = {{"B", "n", 1, "d", 1.0}, {"A", "n", 1, "d", 2.0}, {"A", "n", 2, "d", 4.0},
                                 {"A", "n", 1, "c", 0.5}};
  const auto g = group_summary(s);
  REQUIRE(g.size() == 3);
  CHECK(g[0].config_id == "A");
  CHECK(g[0].metric == "c");
  CHECK(g[0].singleton);
  CHECK(g[1].mean == 3.0);
  CHECK(g[1].std == Approx(std::sqrt(2.0)));
  CHECK(g[2].config_id == "B");
  s.push_back({"B", "n", 1, "d", 1.0});
  CHECK_THROWS_AS(group_summary(s), DomainError);
  CHECK_THROWS_AS(group_summary({}), DomainError);
}

TEST_CASE("significance matrix is mirrored and corrected") {
  std::mt19937_64 rng(3);
  const std::vector<std::pair<std::string, std::vector<double>>> groups = {
      {"C", ref::normal_sample(rng, 10, 0.5, 0.1)},
      {"K2-*", ref::normal_sample(rng, 10, 0.4, 0.1)},
      {"K2-1", ref::normal_sample(rng, 10, 0.45, 0.1)},
      {"lonely", {0.3}}};
  const auto plain = significance_matrix(groups);
  CHECK(plain.comparisons == 3);
  CHECK(plain.untestable == std::vector<bool>{false, false, false, true});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_FALSE(plain.cells[i][i].has_value());
    CHECK_FALSE(plain.cells[i][3].has_value());
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(plain.cells[i][j]->p == plain.cells[j][i]->p);
      CHECK(plain.cells[i][j]->t == -plain.cells[j][i]->t);
      CHECK(plain.cells[i][j]->a_id == groups[i].first);
    }
  }
  SignificanceOptions o;
  o.bonferroni = true;
  const auto corrected = significance_matrix(groups, o);
  CHECK(corrected.correction == "bonferroni");
  CHECK(corrected.cells[0][1]->p == Approx(std::min(1.0, 3 * plain.cells[0][1]->p)));
  const auto csv = to_csv(plain);
  CHECK(csv.rfind("Setting,C,K2-*,K2-1,lonely\r\n", 0) == 0);
  CHECK(to_json(plain).at("ids").size() == 4);
  CHECK_THROWS_AS(significance_matrix({groups[0]}), DomainError);
}

TEST_CASE("R against similarity correlation excludes B and D") {
  std::vector<RSample> s = {{"B", 1.0, 0.1}, {"D", 0.01, 0.9}, {"C", 0.01, 0.6}, {"C", 0.01, 0.62},
                            {"K2-1", 0.005, 0.5}, {"K2-1", 0.005, 0.52}, {"K2-9", 0.02, 0.7}};
  const auto c = r_similarity_correlation(s);
  CHECK(c.n == 5);
  CHECK(c.r > 0.9);
}
