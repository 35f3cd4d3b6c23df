#include "novelrd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "novelrd/error.hpp"

namespace novelrd::report {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string g6(double x) { return fmt("%.6g", x); }

std::optional<double> opt_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

metrics::EntityLists lists_from_json(const json& j) {
  metrics::EntityLists e;
  e.characters = j.value("characters", std::vector<std::string>{});
  e.props = j.value("props", std::vector<std::string>{});
  e.scenes = j.value("scenes", std::vector<std::string>{});
  return e;
}

bool excluded_id(const std::vector<std::string>& excluded, const std::string& id) {
  return std::find(excluded.begin(), excluded.end(), id) != excluded.end();
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

json to_json(const MetricRecord& r) {
  return json{{"config_id", r.config_id},
              {"novel_id", r.novel_id},
              {"genre", r.genre},
              {"chapter_index", r.chapter_index},
              {"R", r.R},
              {"similarity", metrics::to_json(r.report)},
              {"composite", metrics::to_json(r.composite)},
              {"warnings", r.warnings},
              {"judge_error", r.judge_error}};
}

MetricRecord record_from_json(const json& j) {
  MetricRecord r;
  try {
    r.config_id = j.at("config_id").get<std::string>();
    r.novel_id = j.at("novel_id").get<std::string>();
    r.genre = j.value("genre", std::string());
    r.chapter_index = j.at("chapter_index").get<int>();
    r.R = j.at("R").get<double>();
    const json& s = j.at("similarity");
    r.report.cosine = s.at("cosine").get<double>();
    r.report.bert_precision = s.at("bert_precision").get<double>();
    r.report.bert_recall = s.at("bert_recall").get<double>();
    r.report.bert_f1 = s.at("bert_f1").get<double>();
    if (!s.at("judge").is_null()) {
      const json& jj = s.at("judge");
      metrics::JudgeReport jr;
      jr.semantic = jj.at("semantic").get<double>();
      jr.plot = jj.at("plot").get<double>();
      jr.character = jj.at("character").get<double>();
      jr.background = jj.at("background").get<double>();
      jr.style = jj.at("style").get<double>();
      jr.entities_a = lists_from_json(jj.at("entities_a"));
      jr.entities_b = lists_from_json(jj.at("entities_b"));
      jr.warnings = jj.value("warnings", std::vector<std::string>{});
      jr.raw = jj.value("raw", std::string());
      r.report.judge = std::move(jr);
    }
    if (!s.at("struct_euclid").is_null()) {
      metrics::StructDistance d;
      d.char_diff = s.at("char_diff").get<std::int64_t>();
      d.scene_diff = s.at("scene_diff").get<std::int64_t>();
      d.prop_diff = s.at("prop_diff").get<std::int64_t>();
      d.euclid = s.at("struct_euclid").get<double>();
      r.report.structure = d;
    }
    const json& c = j.at("composite");
    r.composite.d_trad = c.at("d_trad").get<double>();
    r.composite.d_llm = opt_number(c, "d_llm");
    r.composite.d_llm3 = opt_number(c, "d_llm3");
    r.composite.d_struct_norm = opt_number(c, "d_struct_norm");
    r.composite.d_total = c.at("d_total").get<double>();
    r.composite.partial = c.value("partial", false);
    r.composite.epsilon = opt_number(c, "epsilon");
    if (c.contains("within_epsilon")) r.composite.within_epsilon = c.at("within_epsilon").get<bool>();
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.judge_error = j.value("judge_error", std::string());
  } catch (const json::exception& e) {
    throw SchemaError("", j.dump(), std::string("malformed metric record: ") + e.what());
  }
  return r;
}

std::vector<MetricRecord> read_metric_records(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read metric records " + path.string());
  std::vector<MetricRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("", line, std::string("metric record is not JSON: ") + e.what());
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

void write_metric_records(const fs::path& path, const std::vector<MetricRecord>& records) {
  std::string content;
  for (const auto& r : records) content += to_json(r).dump() + "\n";
  write_text(path, content);
}

std::vector<stats::MetricSample> samples_of(const std::vector<MetricRecord>& records) {
  std::vector<stats::MetricSample> out;
  for (const auto& r : records) {
    auto add = [&](const char* metric, double v) {
      out.push_back({r.config_id, r.novel_id, r.chapter_index, metric, v});
    };
    add("cosine", r.report.cosine);
    add("bert_precision", r.report.bert_precision);
    add("bert_recall", r.report.bert_recall);
    add("bert_f1", r.report.bert_f1);
    add("d_trad", r.composite.d_trad);
    add("d_total", r.composite.d_total);
    if (r.report.judge) {
      const auto& j = *r.report.judge;
      add("sem_sim", j.semantic);
      add("plot_sim", j.plot);
      add("char_sim", j.character);
      add("background_sim", j.background);
      add("style_sim", j.style);
      add("mean_similarity", j.mean5());
    }
    if (r.composite.d_llm) add("d_llm", *r.composite.d_llm);
    if (r.composite.d_llm3) add("d_llm3", *r.composite.d_llm3);
    if (r.report.structure) {
      add("char_diff", static_cast<double>(r.report.structure->char_diff));
      add("scene_diff", static_cast<double>(r.report.structure->scene_diff));
      add("prop_diff", static_cast<double>(r.report.structure->prop_diff));
      add("struct_euclid", r.report.structure->euclid);
    }
    if (r.composite.d_struct_norm) add("d_struct_norm", *r.composite.d_struct_norm);
  }
  return out;
}

std::vector<stats::MetricSample> novel_means(const std::vector<stats::MetricSample>& samples) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> groups;
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  for (const auto& s : samples) {
    auto key = std::make_tuple(s.config_id, s.novel_id, s.metric);
    auto& g = groups[key];
    if (g.empty()) order.push_back(key);
    g.push_back(s.value);
  }
  std::vector<stats::MetricSample> out;
  for (const auto& key : order) {
    const auto& values = groups.at(key);
    out.push_back({std::get<0>(key), std::get<1>(key), 0, std::get<2>(key),
                   stats::neumaier_sum(values) / static_cast<double>(values.size())});
  }
  return out;
}

const std::vector<SummaryColumn>& summary_columns() {
  static const std::vector<SummaryColumn> cols = {
      {"Cosine", "cosine"},       {"BERT F1", "bert_f1"},    {"SemSim", "sem_sim"},
      {"CharSim", "char_sim"},    {"StyleSim", "style_sim"}, {"CharDiff", "char_diff"},
      {"SceneDiff", "scene_diff"}, {"PropDiff", "prop_diff"}};
  return cols;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> setting_order(const std::vector<MetricRecord>& records) {
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.config_id) == order.end()) order.push_back(r.config_id);
  }
  return order;
}

std::string summary_csv(const std::vector<MetricRecord>& records) {
  const auto summaries = stats::group_summary(samples_of(records));
  std::map<std::pair<std::string, std::string>, stats::GroupSummary> by_key;
  for (const auto& g : summaries) by_key[{g.config_id, g.metric}] = g;
  std::map<std::string, double> r_of;
  for (const auto& r : records) r_of.emplace(r.config_id, r.R);

  std::string out = "Setting,R";
  for (const auto& c : summary_columns()) out += "," + csv_field(c.header);
  out += "\r\n";
  for (const auto& id : setting_order(records)) {
    out += csv_field(id) + "," + fmt("%.3f", r_of.at(id));
    for (const auto& c : summary_columns()) {
      out += ",";
      const auto it = by_key.find({id, c.metric});
      if (it == by_key.end()) continue;
      out += csv_field(fmt("%.3f", it->second.mean) + " \xC2\xB1 " + fmt("%.3f", it->second.std));
    }
    out += "\r\n";
  }
  return out;
}

std::string scatter_csv(const std::vector<MetricRecord>& records,
                        const std::vector<std::string>& excluded) {
  std::string out = "Setting,Novel,Chapter,R,MeanSimilarity\r\n";
  for (const auto& r : records) {
    if (excluded_id(excluded, r.config_id) || !r.report.judge) continue;
    out += csv_field(r.config_id) + "," + csv_field(r.novel_id) + "," +
           std::to_string(r.chapter_index) + "," + g6(r.R) + "," + g6(r.report.judge->mean5()) + "\r\n";
  }
  return out;
}

std::string r_grid_csv(const pipeline::ConfigGrid& grid) {
  std::string out = "Setting,Variant,Alphas,R_computed,R_printed,Match,Supported\r\n";
  for (const auto& e : grid.entries()) {
    std::string alphas;
    for (const auto& a : e.config.alphas) alphas += (alphas.empty() ? "" : " x ") + a.str();
    const auto exact = e.config.R_exact();
    std::string match;
    if (!e.printed_r.empty()) {
      const auto printed = pipeline::Ratio::parse(e.printed_r);
      if (printed == exact) {
        match = "yes";
      } else {
        // Half-up rounding of the exact R to the printed number of decimals.
        const auto dot = e.printed_r.find('.');
        const std::size_t places = dot == std::string::npos ? 0 : e.printed_r.size() - dot - 1;
        std::int64_t scale = 1;
        for (std::size_t i = 0; i < places; ++i) scale *= 10;
        const std::int64_t rounded = (2 * exact.num() * scale + exact.den()) / (2 * exact.den());
        match = pipeline::Ratio(rounded, scale) == printed ? "rounded" : "no";
      }
    }
    out += csv_field(e.config.id) + "," + std::string(pipeline::to_string(e.config.variant)) + "," +
           csv_field(alphas) + "," + exact.str() + "," + e.printed_r + "," + match + "," +
           (e.supported ? "yes" : "no") + "\r\n";
  }
  return out;
}

std::string scatter_svg(const std::vector<MetricRecord>& records,
                        const std::vector<std::string>& excluded) {
  constexpr double W = 480, H = 360, L = 60, B = 40, T = 20, Rm = 20;
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : records) {
    if (!excluded_id(excluded, r.config_id) && r.report.judge) pts.emplace_back(r.R, r.report.judge->mean5());
  }
  double xmax = 0.0;
  for (const auto& p : pts) xmax = std::max(xmax, p.first);
  if (xmax <= 0.0) xmax = 1.0;
  xmax *= 1.1;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (W + L) / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">R</text>\n";
  s << "<text x=\"14\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << H / 2
    << ")\" text-anchor=\"middle\">mean similarity</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = H - B - (H - B - T) * k / 4.0;
    s << "<text x=\"" << L - 6 << "\" y=\"" << g6(y + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
      << g6(k / 4.0) << "</text>\n";
    const double x = L + (W - Rm - L) * k / 4.0;
    s << "<text x=\"" << g6(x) << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\" font-size=\"10\">"
      << g6(xmax * k / 4.0) << "</text>\n";
  }
  for (const auto& [x, y] : pts) {
    const double px = L + (W - Rm - L) * x / xmax;
    const double py = H - B - (H - B - T) * std::clamp(y, 0.0, 1.0);
    s << "<circle cx=\"" << g6(px) << "\" cy=\"" << g6(py) << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string heatmap_svg(const stats::SignificanceMatrix& m) {
  constexpr double cell = 48, margin = 70;
  const double size = margin + cell * static_cast<double>(m.ids.size()) + 10;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << g6(size) << "\" height=\"" << g6(size)
    << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    const double off = margin + cell * static_cast<double>(i) + cell / 2;
    s << "<text x=\"" << margin - 6 << "\" y=\"" << g6(off + 4)
      << "\" text-anchor=\"end\" font-size=\"11\">" << xml_escape(m.ids[i]) << "</text>\n";
    s << "<text x=\"" << g6(off) << "\" y=\"" << margin - 8
      << "\" text-anchor=\"middle\" font-size=\"11\">" << xml_escape(m.ids[i]) << "</text>\n";
  }
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    for (std::size_t j = 0; j < m.ids.size(); ++j) {
      const double x = margin + cell * static_cast<double>(j);
      const double y = margin + cell * static_cast<double>(i);
      const auto& c = m.cells[i][j];
      std::string fill = "#eeeeee";
      std::string label;
      if (c) {
        // Shade by -log10 p, saturating at p = 1e-6.
        const double strength = std::clamp(-std::log10(std::max(c->p, 1e-300)) / 6.0, 0.0, 1.0);
        const int level = static_cast<int>(std::lround(255 - 200 * strength));
        char buf[16];
        std::snprintf(buf, sizeof buf, "#ff%02x%02x", level, level);
        fill = buf;
        label = c->stars.empty() ? "ns" : c->stars;
      }
      s << "<rect x=\"" << g6(x) << "\" y=\"" << g6(y) << "\" width=\"" << cell << "\" height=\"" << cell
        << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      if (!label.empty()) {
        s << "<text x=\"" << g6(x + cell / 2) << "\" y=\"" << g6(y + cell / 2 + 4)
          << "\" text-anchor=\"middle\" font-size=\"12\">" << label << "</text>\n";
      }
    }
  }
  s << "</svg>\n";
  return s.str();
}

ReportBundle build_report(const std::vector<MetricRecord>& records, const pipeline::ConfigGrid& grid,
                          const ReportOptions& options) {
  if (records.empty()) throw DomainError("no metric records to report");
  ReportBundle b;
  const auto chapter_samples = samples_of(records);
  b.summary_csv = summary_csv(records);

  json groups = json::array();
  for (const auto& g : stats::group_summary(chapter_samples)) {
    groups.push_back({{"config_id", g.config_id}, {"metric", g.metric}, {"n", g.n},
                      {"mean", g.mean}, {"std", g.std}, {"singleton", g.singleton}});
  }
  b.groups_json = groups.dump(2) + "\n";

  const auto test_samples = options.novel_means ? novel_means(chapter_samples) : chapter_samples;
  std::vector<std::pair<std::string, std::vector<double>>> sig_groups;
  for (const auto& id : setting_order(records)) {
    std::vector<double> values;
    for (const auto& s : test_samples) {
      if (s.config_id == id && s.metric == options.significance.metric) values.push_back(s.value);
    }
    sig_groups.emplace_back(id, std::move(values));
  }
  json sig_json;
  if (sig_groups.size() >= 2) {
    const auto matrix = stats::significance_matrix(sig_groups, options.significance);
    sig_json = stats::to_json(matrix);
    sig_json["unit"] = options.novel_means ? "novel_mean" : "chapter";
    b.significance_csv = stats::to_csv(matrix);
    b.heatmap_svg = heatmap_svg(matrix);
  } else {
    sig_json = {{"metric", options.significance.metric}, {"ids", {sig_groups.front().first}},
                {"error", "significance needs at least two settings"}};
    b.significance_csv = "Setting," + csv_field(sig_groups.front().first) + "\r\n" +
                         csv_field(sig_groups.front().first) + ",\r\n";
    b.warnings.push_back("only one setting; significance matrix is empty");
  }
  b.significance_json = sig_json.dump(2) + "\n";

  std::vector<stats::RSample> rs;
  for (const auto& r : records) {
    if (r.report.judge) rs.push_back({r.config_id, r.R, r.report.judge->mean5()});
  }
  json corr;
  try {
    corr = stats::to_json(stats::r_similarity_correlation(rs, options.excluded));
  } catch (const DomainError& e) {
    corr = {{"x", "R"}, {"y", "mean_similarity"}, {"error", e.what()}};
    b.warnings.push_back(std::string("correlation: ") + e.what());
  }
  corr["excluded"] = options.excluded;
  b.correlation_json = corr.dump(2) + "\n";

  b.scatter_csv = scatter_csv(records, options.excluded);
  b.scatter_svg = scatter_svg(records, options.excluded);
  b.r_grid_csv = r_grid_csv(grid);
  return b;
}

void write_report(const ReportBundle& b, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "summary.csv", b.summary_csv);
  write_text(dir / "groups.json", b.groups_json);
  write_text(dir / "significance.json", b.significance_json);
  write_text(dir / "significance.csv", b.significance_csv);
  write_text(dir / "correlation.json", b.correlation_json);
  write_text(dir / "scatter.csv", b.scatter_csv);
  write_text(dir / "r_grid.csv", b.r_grid_csv);
  write_text(dir / "scatter.svg", b.scatter_svg);
  if (!b.heatmap_svg.empty()) write_text(dir / "heatmap.svg", b.heatmap_svg);
}

}  // namespace novelrd::report
