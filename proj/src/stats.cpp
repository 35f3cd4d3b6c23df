#include "novelrd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "novelrd/error.hpp"

namespace novelrd::stats {

using nlohmann::json;

namespace {

constexpr double kTiny = 1e-300;

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw DomainError("incomplete beta continued fraction did not converge");
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  ///< divisor n - 1
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  const auto n = static_cast<double>(xs.size());
  m.mean = neumaier_sum(xs) / n;
  if (xs.size() > 1) {
    std::vector<double> sq;
    sq.reserve(xs.size());
    for (double x : xs) sq.push_back((x - m.mean) * (x - m.mean));
    m.var = neumaier_sum(sq) / (n - 1.0);
  }
  return m;
}

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json number_or_string(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

}  // namespace

double neumaier_sum(const std::vector<double>& xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw DomainError("student_t: dof must be positive");
  if (std::isnan(t)) throw DomainError("student_t: t is NaN");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  // x = dof / (dof + t^2), written to stay accurate when t^2 dwarfs dof.
  const double x = 1.0 / (1.0 + (t / dof) * t);
  return std::clamp(incomplete_beta(dof / 2.0, 0.5, x), 0.0, 1.0);
}

double student_t_cdf(double t, double dof) {
  const double tail = student_t_two_sided_p(t, dof) / 2.0;
  return t < 0.0 ? tail : 1.0 - tail;
}

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string format_p(double p) {
  if (p < 1e-300) return "<1e-300";
  return fmt("%.6g", p);
}

std::vector<GroupSummary> group_summary(const std::vector<MetricSample>& samples) {
  if (samples.empty()) throw DomainError("group_summary: no samples");
  std::set<std::tuple<std::string, std::string, int, std::string>> seen;
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& s : samples) {
    if (!std::isfinite(s.value)) {
      throw DomainError("group_summary: non-finite value for " + s.config_id + "/" + s.metric);
    }
    if (!seen.emplace(s.config_id, s.novel_id, s.chapter_index, s.metric).second) {
      throw DomainError("group_summary: duplicate sample " + s.config_id + "/" + s.novel_id + "/" +
                        std::to_string(s.chapter_index) + "/" + s.metric);
    }
    groups[{s.config_id, s.metric}].push_back(s.value);
  }
  std::vector<GroupSummary> out;
  for (const auto& [key, values] : groups) {
    const auto m = moments(values);
    GroupSummary g;
    g.config_id = key.first;
    g.metric = key.second;
    g.n = static_cast<std::int64_t>(values.size());
    g.mean = m.mean;
    g.std = std::sqrt(m.var);
    g.singleton = g.n == 1;
    out.push_back(std::move(g));
  }
  return out;
}

TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b, bool pooled) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("t-test needs at least two values per sample");
  for (double x : a) {
    if (!std::isfinite(x)) throw DomainError("t-test: non-finite value");
  }
  for (double x : b) {
    if (!std::isfinite(x)) throw DomainError("t-test: non-finite value");
  }
  const auto ma = moments(a);
  const auto mb = moments(b);
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());

  TTestResult r;
  r.n_a = static_cast<std::int64_t>(a.size());
  r.n_b = static_cast<std::int64_t>(b.size());
  r.mean_a = ma.mean;
  r.mean_b = mb.mean;
  const double diff = ma.mean - mb.mean;

  double se2 = 0.0;
  if (pooled) {
    r.dof = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * ma.var + (nb - 1.0) * mb.var) / r.dof;
    se2 = sp2 * (1.0 / na + 1.0 / nb);
  } else {
    const double qa = ma.var / na;
    const double qb = mb.var / nb;
    se2 = qa + qb;
    const double denom = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
    r.dof = denom > 0.0 ? se2 * se2 / denom : na + nb - 2.0;
  }

  if (!(se2 > 0.0)) {
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
      r.flag = "constant";
    } else {
      r.t = diff > 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
      r.flag = "degenerate";
    }
  } else {
    r.t = diff / std::sqrt(se2);
    r.p = student_t_two_sided_p(r.t, r.dof);
  }
  r.stars = stars(r.p);
  return r;
}

CorrelationResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("pearson: samples differ in length");
  if (x.size() < 3) throw DomainError("pearson: needs at least three pairs");
  const auto mx = moments(x);
  const auto my = moments(y);
  std::vector<double> sxy;
  std::vector<double> sxx;
  std::vector<double> syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx.mean;
    const double dy = y[i] - my.mean;
    sxy.push_back(dx * dy);
    sxx.push_back(dx * dx);
    syy.push_back(dy * dy);
  }
  const double vx = neumaier_sum(sxx);
  const double vy = neumaier_sum(syy);
  if (!(vx > 0.0) || !(vy > 0.0)) throw DomainError("pearson: zero variance, correlation undefined");
  CorrelationResult c;
  c.n = static_cast<std::int64_t>(x.size());
  c.r = std::clamp(neumaier_sum(sxy) / std::sqrt(vx * vy), -1.0, 1.0);
  const double dof = static_cast<double>(c.n - 2);
  if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    const double t = c.r * std::sqrt(dof / ((1.0 - c.r) * (1.0 + c.r)));
    c.p = student_t_two_sided_p(t, dof);
  }
  return c;
}

SignificanceMatrix significance_matrix(
    const std::vector<std::pair<std::string, std::vector<double>>>& groups,
    const SignificanceOptions& options) {
  if (groups.size() < 2) throw DomainError("significance_matrix: needs at least two groups");
  SignificanceMatrix m;
  m.metric = options.metric;
  m.pooled = options.pooled;
  m.correction = options.bonferroni ? "bonferroni" : "none";
  const std::size_t k = groups.size();
  m.cells.assign(k, std::vector<std::optional<TTestResult>>(k));
  for (const auto& g : groups) {
    m.ids.push_back(g.first);
    m.untestable.push_back(g.second.size() < 2);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      if (m.untestable[i] || m.untestable[j]) continue;
      auto r = welch_t_test(groups[i].second, groups[j].second, options.pooled);
      r.a_id = groups[i].first;
      r.b_id = groups[j].first;
      r.metric = options.metric;
      m.cells[i][j] = r;
      ++m.comparisons;
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      auto& cell = m.cells[i][j];
      if (!cell) continue;
      if (options.bonferroni) {
        cell->p = std::min(1.0, cell->p * static_cast<double>(m.comparisons));
        cell->stars = stars(cell->p);
      }
      TTestResult mirror = *cell;
      std::swap(mirror.a_id, mirror.b_id);
      std::swap(mirror.n_a, mirror.n_b);
      std::swap(mirror.mean_a, mirror.mean_b);
      mirror.t = -mirror.t;
      m.cells[j][i] = mirror;
    }
  }
  return m;
}

json to_json(const TTestResult& t) {
  return json{{"a", t.a_id},       {"b", t.b_id},         {"metric", t.metric},
              {"n_a", t.n_a},      {"n_b", t.n_b},        {"mean_a", t.mean_a},
              {"mean_b", t.mean_b}, {"t", number_or_string(t.t)}, {"dof", t.dof},
              {"p", t.p},          {"p_text", format_p(t.p)}, {"stars", t.stars},
              {"flag", t.flag}};
}

json to_json(const SignificanceMatrix& m) {
  json cells = json::array();
  for (const auto& row : m.cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(c ? to_json(*c) : json(nullptr));
    cells.push_back(r);
  }
  json untestable = json::array();
  for (bool u : m.untestable) untestable.push_back(u);
  return json{{"metric", m.metric},       {"test", m.pooled ? "student_pooled" : "welch"},
              {"correction", m.correction}, {"comparisons", m.comparisons},
              {"ids", m.ids},             {"untestable", untestable},
              {"cells", cells}};
}

std::string to_csv(const SignificanceMatrix& m) {
  std::string out = "Setting";
  for (const auto& id : m.ids) out += "," + csv_quote(id);
  out += "\r\n";
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    out += csv_quote(m.ids[i]);
    for (std::size_t j = 0; j < m.ids.size(); ++j) {
      out += ",";
      const auto& c = m.cells[i][j];
      if (c) out += csv_quote(format_p(c->p) + (c->stars.empty() ? "" : " " + c->stars));
      else if (i != j && (m.untestable[i] || m.untestable[j])) out += "untestable";
    }
    out += "\r\n";
  }
  return out;
}

CorrelationResult r_similarity_correlation(const std::vector<RSample>& samples,
                                           const std::vector<std::string>& excluded) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& s : samples) {
    if (std::find(excluded.begin(), excluded.end(), s.config_id) != excluded.end()) continue;
    x.push_back(s.R);
    y.push_back(s.similarity);
  }
  auto c = pearson(x, y);
  c.x_name = "R";
  c.y_name = "mean_similarity";
  return c;
}

json to_json(const CorrelationResult& c) {
  return json{{"x", c.x_name}, {"y", c.y_name}, {"r", c.r},
              {"p", c.p},      {"p_text", format_p(c.p)}, {"n", c.n}};
}

}  // namespace novelrd::stats
