#include "novelrd/pipeline/chapter_detail.hpp"

#include <algorithm>

#include "novelrd/error.hpp"

namespace novelrd::pipeline {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> dedup(std::vector<std::string> items) {
  std::vector<std::string> out;
  for (auto& item : items) {
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(std::move(item));
  }
  return out;
}

std::vector<std::string> read_list(const json& obj, std::string_view key, const std::string& raw) {
  const std::string k(key);
  if (!obj.contains(k)) throw SchemaError(k, raw, "chapter detail is missing key " + k);
  const json& v = obj.at(k);
  if (v.is_null()) return {};
  if (!v.is_array()) throw SchemaError(k, raw, "chapter detail key " + k + " must be a list");
  std::vector<std::string> items;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(k, raw, "chapter detail key " + k + " holds a non-string");
    items.push_back(e.get<std::string>());
  }
  return dedup(std::move(items));
}

constexpr std::string_view kListKeys[] = {detail_keys::kCharacters, detail_keys::kProps,
                                          detail_keys::kScenes, detail_keys::kForeshadowSet,
                                          detail_keys::kForeshadowResolved};

}  // namespace

std::string strip_code_fences(std::string_view payload, bool* stripped) {
  std::string_view s = trim(payload);
  if (stripped) *stripped = false;
  if (s.substr(0, 3) != "```") return std::string(s);
  const auto first_nl = s.find('\n');
  if (first_nl == std::string_view::npos) return std::string(s);
  std::string_view body = s.substr(first_nl + 1);
  body = trim(body);
  if (body.size() >= 3 && body.substr(body.size() - 3) == "```") body.remove_suffix(3);
  if (stripped) *stripped = true;
  return std::string(trim(body));
}

DetailParse validate_chapter_detail(std::string_view payload) {
  DetailParse out;
  const std::string raw(payload);
  const std::string body = strip_code_fences(payload, &out.fences_stripped);
  json obj;
  try {
    obj = json::parse(body);
  } catch (const json::parse_error& e) {
    throw SchemaError("", raw, std::string("chapter detail is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw SchemaError("", raw, "chapter detail must be a JSON object");

  const std::string plot_key(detail_keys::kPlotSummary);
  if (!obj.contains(plot_key)) throw SchemaError(plot_key, raw, "chapter detail is missing key " + plot_key);
  if (!obj.at(plot_key).is_string()) {
    throw SchemaError(plot_key, raw, "chapter detail key " + plot_key + " must be a string");
  }
  out.detail.plot_summary = obj.at(plot_key).get<std::string>();
  out.detail.characters = read_list(obj, detail_keys::kCharacters, raw);
  out.detail.props = read_list(obj, detail_keys::kProps, raw);
  out.detail.scenes = read_list(obj, detail_keys::kScenes, raw);
  out.detail.foreshadow_set = read_list(obj, detail_keys::kForeshadowSet, raw);
  out.detail.foreshadow_resolved = read_list(obj, detail_keys::kForeshadowResolved, raw);

  for (const auto& [key, value] : obj.items()) {
    const bool known = key == plot_key || std::find(std::begin(kListKeys), std::end(kListKeys),
                                                    key) != std::end(kListKeys);
    if (!known) {
      out.extras[key] = value;
      out.warnings.push_back("unknown chapter detail key '" + key + "' kept in sidecar");
    }
  }
  return out;
}

json to_json(const ChapterDetail& d) {
  return json{{std::string(detail_keys::kPlotSummary), d.plot_summary},
              {std::string(detail_keys::kCharacters), d.characters},
              {std::string(detail_keys::kProps), d.props},
              {std::string(detail_keys::kScenes), d.scenes},
              {std::string(detail_keys::kForeshadowSet), d.foreshadow_set},
              {std::string(detail_keys::kForeshadowResolved), d.foreshadow_resolved}};
}

ChapterDetail detail_from_json(const json& j) { return validate_chapter_detail(j.dump()).detail; }

std::string render_detail(const ChapterDetail& d) {
  std::string out = d.plot_summary;
  auto add = [&](std::string_view label, const std::vector<std::string>& items) {
    if (items.empty()) return;
    out += "｜";
    out += label;
    out += "：";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += "、";
      out += items[i];
    }
  };
  add("人物", d.characters);
  add("道具", d.props);
  add("场景", d.scenes);
  add("伏笔设下", d.foreshadow_set);
  add("伏笔回收", d.foreshadow_resolved);
  return out;
}

std::int64_t detail_units(const ChapterDetail& d, UnitMode mode) {
  std::int64_t n = count_units(d.plot_summary, mode);
  for (const auto* list : {&d.characters, &d.props, &d.scenes, &d.foreshadow_set,
                           &d.foreshadow_resolved}) {
    for (const auto& item : *list) n += count_units(item, mode);
  }
  return n;
}

}  // namespace novelrd::pipeline
