#include "novelrd/pipeline/config.hpp"

#include <algorithm>
#include <numeric>

#include "novelrd/corpus.hpp"
#include "novelrd/error.hpp"
#include "novelrd/resources.hpp"

namespace novelrd::pipeline {

using nlohmann::json;

Ratio::Ratio(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) throw ConfigError("ratio must be a nonnegative fraction");
  const auto g = std::gcd(num, den);
  num_ = g ? num / g : num;
  den_ = g ? den / g : den;
}

Ratio Ratio::parse(std::string_view decimal) {
  const std::string text(decimal);
  if (decimal.empty()) throw ConfigError("empty ratio");
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool seen_point = false;
  bool seen_digit = false;
  for (char c : decimal) {
    if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      if (num > (INT64_MAX - 9) / 10 || (seen_point && den > INT64_MAX / 10)) {
        throw ConfigError("ratio has too many digits: " + text);
      }
      num = num * 10 + (c - '0');
      if (seen_point) den *= 10;
      seen_digit = true;
    } else {
      throw ConfigError("ratio must be a plain decimal: " + text);
    }
  }
  if (!seen_digit) throw ConfigError("ratio must be a plain decimal: " + text);
  return Ratio(num, den);
}

std::string Ratio::str() const {
  // den = 2^a 5^b terminates after max(a, b) decimal digits.
  std::int64_t rest = den_;
  int twos = 0;
  int fives = 0;
  while (rest % 2 == 0) rest /= 2, ++twos;
  while (rest % 5 == 0) rest /= 5, ++fives;
  if (rest != 1) return std::to_string(num_) + "/" + std::to_string(den_);
  const int digits = std::max(twos, fives);
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  std::string s = std::to_string(num_ * (scale / den_));
  if (digits == 0) return s;
  const auto width = static_cast<std::size_t>(digits);
  if (s.size() <= width) s.insert(0, width + 1 - s.size(), '0');
  s.insert(s.size() - width, ".");
  return s;
}

std::int64_t Ratio::scale_ceil(std::int64_t units) const {
  return (num_ * units + den_ - 1) / den_;
}

Ratio Ratio::operator*(const Ratio& other) const {
  // Cross-reduce first to keep intermediate products small.
  const auto g1 = std::gcd(num_, other.den_);
  const auto g2 = std::gcd(other.num_, den_);
  const auto a = g1 ? num_ / g1 : num_;
  const auto d2 = g1 ? other.den_ / g1 : other.den_;
  const auto b = g2 ? other.num_ / g2 : other.num_;
  const auto d1 = g2 ? den_ / g2 : den_;
  return Ratio(a * b, d1 * d2);
}

Variant parse_variant(std::string_view name) {
  if (name == "single_stage") return Variant::SingleStage;
  if (name == "hierarchical") return Variant::HierarchicalTwoStage;
  if (name == "mixed") return Variant::MixedTwoStage;
  if (name == "longwriter") return Variant::LongWriterBaseline;
  throw ConfigError("unknown pipeline variant: " + std::string(name));
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::SingleStage: return "single_stage";
    case Variant::HierarchicalTwoStage: return "hierarchical";
    case Variant::MixedTwoStage: return "mixed";
    case Variant::LongWriterBaseline: return "longwriter";
  }
  return "?";
}

Ratio PipelineConfig::R_exact() const {
  Ratio r(1, 1);
  for (const auto& a : alphas) r = r * a;
  return r;
}

void PipelineConfig::validate() const {
  if (id.empty()) throw ConfigError("pipeline config needs an id");
  const bool one_stage = variant == Variant::SingleStage || variant == Variant::LongWriterBaseline;
  const int want = one_stage ? 1 : 2;
  if (K() != want) {
    throw ConfigError("config " + id + ": variant " + std::string(to_string(variant)) + " needs " +
                      std::to_string(want) + " alpha(s), got " + std::to_string(K()));
  }
  for (const auto& a : alphas) {
    if (a.num() == 0 || a.num() > a.den()) {
      throw ConfigError("config " + id + ": alpha " + a.str() + " outside (0, 1]");
    }
  }
  if (!one_stage && alphas.front() == Ratio(1, 1)) {
    throw ConfigError("config " + id + ": stage-1 alpha must be below 1");
  }
}

double compute_R(const PipelineConfig& config) {
  config.validate();
  return config.R_exact().value();
}

GridEntry grid_entry_from_json(const json& j) {
  GridEntry e;
  try {
    e.config.id = j.at("id").get<std::string>();
    e.config.variant = parse_variant(j.at("variant").get<std::string>());
    for (const auto& a : j.at("alphas")) {
      e.config.alphas.push_back(Ratio::parse(a.is_string() ? a.get<std::string>() : a.dump()));
    }
    e.config.stage1_structured = j.value("structured", false);
    e.printed_r = j.value("printed_r", std::string());
    e.supported = j.value("supported", true);
    e.note = j.value("note", std::string());
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed grid entry: ") + ex.what());
  }
  e.config.validate();
  return e;
}

json to_json(const GridEntry& e) {
  json alphas = json::array();
  for (const auto& a : e.config.alphas) alphas.push_back(a.str());
  json j{{"id", e.config.id},
         {"variant", to_string(e.config.variant)},
         {"alphas", alphas},
         {"structured", e.config.stage1_structured},
         {"printed_r", e.printed_r}};
  if (!e.supported) j["supported"] = false;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

ConfigGrid ConfigGrid::parse(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("grid file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("configs") || !j.at("configs").is_array()) {
    throw ConfigError("grid file needs a \"configs\" array");
  }
  ConfigGrid grid;
  for (const auto& entry : j.at("configs")) {
    auto e = grid_entry_from_json(entry);
    if (grid.contains(e.config.id)) throw ConfigError("duplicate grid id: " + e.config.id);
    grid.entries_.push_back(std::move(e));
  }
  return grid;
}

ConfigGrid ConfigGrid::embedded() { return parse(resources::get("data/grid.json")); }

ConfigGrid ConfigGrid::from_file(const std::filesystem::path& path) {
  try {
    return parse(read_text_file(path));
  } catch (const IngestError& e) {
    throw ConfigError(std::string("cannot read grid file: ") + e.path());
  }
}

const GridEntry& ConfigGrid::find(std::string_view id) const {
  for (const auto& e : entries_) {
    if (e.config.id == id) return e;
  }
  throw ConfigError("unknown pipeline config id: " + std::string(id));
}

bool ConfigGrid::contains(std::string_view id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const GridEntry& e) { return e.config.id == id; });
}

void ConfigGrid::add(GridEntry entry) {
  entry.config.validate();
  for (auto& e : entries_) {
    if (e.config.id == entry.config.id) {
      e = std::move(entry);
      return;
    }
  }
  entries_.push_back(std::move(entry));
}

}  // namespace novelrd::pipeline
