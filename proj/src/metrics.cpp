#include "novelrd/metrics.hpp"

#include <map>

#include "novelrd/pipeline/chapter_detail.hpp"
#include "novelrd/provider/task.hpp"
#include "novelrd/units.hpp"

namespace novelrd::metrics {

using nlohmann::json;

namespace {

constexpr std::int64_t kJudgeOutputUnits = 4096;

constexpr const char* kScoreKeys[] = {"semantic_similarity", "plot_similarity",
                                      "character_similarity", "background_similarity",
                                      "style_similarity"};

std::vector<std::string> read_entities(const json& obj, const std::string& key,
                                       const std::string& raw) {
  if (!obj.contains(key)) throw SchemaError(key, raw, "judge payload is missing key " + key);
  const json& v = obj.at(key);
  if (v.is_null()) return {};
  if (!v.is_array()) throw SchemaError(key, raw, "judge key " + key + " must be a list");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(key, raw, "judge key " + key + " holds a non-string");
    auto s = e.get<std::string>();
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

double read_score(const json& obj, const std::string& key, const std::string& raw,
                  std::vector<std::string>& warnings) {
  if (!obj.contains(key)) throw SchemaError(key, raw, "judge payload is missing key " + key);
  const json& v = obj.at(key);
  if (!v.is_number()) throw SchemaError(key, raw, "judge score " + key + " is not a number");
  const double x = v.get<double>();
  if (x < 0.0 || x > 1.0) {
    const double c = std::clamp(x, 0.0, 1.0);
    warnings.push_back(key + " = " + v.dump() + " clamped to " + json(c).dump());
    return c;
  }
  return x;
}

void check_count(const json& obj, const std::string& key, std::size_t local,
                 std::vector<std::string>& warnings) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() != static_cast<std::int64_t>(local)) {
    warnings.push_back(key + " = " + v.dump() + " disagrees with the list; using " +
                       std::to_string(local));
  }
}

EntityLists read_side(const json& obj, const std::string& side, const std::string& raw,
                      std::vector<std::string>& warnings) {
  EntityLists e;
  e.props = read_entities(obj, "props_" + side, raw);
  e.characters = read_entities(obj, "characters_" + side, raw);
  e.scenes = read_entities(obj, "scenes_" + side, raw);
  check_count(obj, "props_" + side + "_count", e.props.size(), warnings);
  check_count(obj, "characters_" + side + "_count", e.characters.size(), warnings);
  check_count(obj, "scenes_" + side + "_count", e.scenes.size(), warnings);
  return e;
}

json lists_json(const EntityLists& e) {
  return json{{"characters", e.characters},
              {"props", e.props},
              {"scenes", e.scenes},
              {"counts",
               {{"characters", e.characters.size()},
                {"props", e.props.size()},
                {"scenes", e.scenes.size()}}}};
}

}  // namespace

Eigen::MatrixXd stack_rows(const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(vectors.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), cols);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (static_cast<Eigen::Index>(vectors[i].size()) != cols) {
      throw DomainError("stack_rows: vectors differ in dimension");
    }
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = vectors[i][static_cast<std::size_t>(j)];
  }
  return m;
}

EntityCounts counts_of(const EntityLists& e) {
  return {static_cast<std::int64_t>(e.characters.size()), static_cast<std::int64_t>(e.scenes.size()),
          static_cast<std::int64_t>(e.props.size())};
}

JudgeReport parse_judge_payload(std::string_view payload) {
  const std::string raw(payload);
  bool stripped = false;
  const std::string body = pipeline::strip_code_fences(payload, &stripped);
  json obj;
  try {
    obj = json::parse(body);
  } catch (const json::parse_error& e) {
    throw SchemaError("", raw, std::string("judge payload is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw SchemaError("", raw, "judge payload must be a JSON object");

  JudgeReport r;
  r.raw = raw;
  if (stripped) r.warnings.push_back("code fences stripped from judge payload");
  r.semantic = read_score(obj, kScoreKeys[0], raw, r.warnings);
  r.plot = read_score(obj, kScoreKeys[1], raw, r.warnings);
  r.character = read_score(obj, kScoreKeys[2], raw, r.warnings);
  r.background = read_score(obj, kScoreKeys[3], raw, r.warnings);
  r.style = read_score(obj, kScoreKeys[4], raw, r.warnings);
  r.entities_a = read_side(obj, "a", raw, r.warnings);
  r.entities_b = read_side(obj, "b", raw, r.warnings);
  return r;
}

JudgeReport judge_similarity(std::string_view text_a, std::string_view text_b,
                             provider::ProviderClient& client,
                             const pipeline::TemplateSet& templates, pipeline::Language lang,
                             std::vector<provider::CacheKey>* provenance) {
  if (text_a.empty() || text_b.empty()) throw DomainError("judge_similarity: empty text");
  namespace task = provider::task;
  provider::GenerationRequest req;
  req.prompt = templates.render(pipeline::TemplateId::Judge, lang,
                                {{"text_a", std::string(text_a)}, {"text_b", std::string(text_b)}});
  req.max_output_units = kJudgeOutputUnits;
  req.temperature = client.config().temperature;
  req.hint = {{std::string(task::kKind), std::string(task::kJudge)},
              {std::string(task::kTextA), std::string(text_a)},
              {std::string(task::kTextB), std::string(text_b)}};
  auto first = client.generate_logged(req);
  if (provenance) provenance->push_back(first.key);
  try {
    return parse_judge_payload(first.response.text);
  } catch (const SchemaError&) {
    req.prompt += templates.get(pipeline::TemplateId::JsonRepair, lang);
    auto second = client.generate_logged(req);
    if (provenance) provenance->push_back(second.key);
    auto r = parse_judge_payload(second.response.text);
    r.warnings.push_back("judge payload repaired by a second request");
    return r;
  }
}

StructDistance struct_distance(const EntityCounts& a, const EntityCounts& b) {
  if (a.characters < 0 || a.scenes < 0 || a.props < 0 || b.characters < 0 || b.scenes < 0 ||
      b.props < 0) {
    throw DomainError("struct_distance: negative count");
  }
  StructDistance d;
  d.char_diff = std::abs(a.characters - b.characters);
  d.scene_diff = std::abs(a.scenes - b.scenes);
  d.prop_diff = std::abs(a.props - b.props);
  const auto c = static_cast<double>(d.char_diff);
  const auto s = static_cast<double>(d.scene_diff);
  const auto p = static_cast<double>(d.prop_diff);
  d.euclid = std::sqrt(c * c + s * s + p * p);
  return d;
}

double d_trad_of(double cosine, double bert_f1) {
  return ((1.0 - cosine) + (1.0 - bert_f1)) / 2.0;
}

double d_llm_of(const std::vector<double>& judge_scores) {
  if (judge_scores.empty()) throw DomainError("d_llm_of: no scores");
  double sum = 0.0;
  for (double s : judge_scores) sum += s;
  return 1.0 - sum / static_cast<double>(judge_scores.size());
}

DistortionComposite composite_distortion(const SimilarityReport& report,
                                         const CompositeOptions& options) {
  if (options.norm_cap <= 0.0) throw ConfigError("norm_cap must be positive");
  if (options.w_trad < 0.0 || options.w_llm < 0.0 || options.w_struct < 0.0) {
    throw ConfigError("composite weights must be nonnegative");
  }
  DistortionComposite d;
  // Cosine distance lies in [0, 2]; the component is clipped into [0, 1].
  d.d_trad = std::clamp(d_trad_of(report.cosine, report.bert_f1), 0.0, 1.0);
  double weighted = options.w_trad * d.d_trad;
  double weights = options.w_trad;
  if (report.judge) {
    const auto& j = *report.judge;
    d.d_llm = 1.0 - j.mean5();
    d.d_llm3 = 1.0 - j.mean3();
    weighted += options.w_llm * *d.d_llm;
    weights += options.w_llm;
  } else {
    d.partial = true;
  }
  if (report.structure) {
    d.d_struct_norm = std::clamp(report.structure->euclid / options.norm_cap, 0.0, 1.0);
    weighted += options.w_struct * *d.d_struct_norm;
    weights += options.w_struct;
  } else {
    d.partial = true;
  }
  if (!(weights > 0.0)) throw ConfigError("composite weights sum to zero");
  d.d_total = weighted / weights;
  if (options.epsilon) {
    d.epsilon = options.epsilon;
    d.within_epsilon = d.d_total <= *options.epsilon;
  }
  return d;
}

json to_json(const JudgeReport& r) {
  return json{{"semantic", r.semantic},
              {"plot", r.plot},
              {"character", r.character},
              {"background", r.background},
              {"style", r.style},
              {"entities_a", lists_json(r.entities_a)},
              {"entities_b", lists_json(r.entities_b)},
              {"warnings", r.warnings},
              {"raw", r.raw}};
}

json to_json(const SimilarityReport& r) {
  json j{{"cosine", r.cosine},
         {"bert_precision", r.bert_precision},
         {"bert_recall", r.bert_recall},
         {"bert_f1", r.bert_f1}};
  j["judge"] = r.judge ? to_json(*r.judge) : json(nullptr);
  if (r.structure) {
    j["char_diff"] = r.structure->char_diff;
    j["scene_diff"] = r.structure->scene_diff;
    j["prop_diff"] = r.structure->prop_diff;
    j["struct_euclid"] = r.structure->euclid;
  } else {
    j["char_diff"] = j["scene_diff"] = j["prop_diff"] = j["struct_euclid"] = nullptr;
  }
  return j;
}

json to_json(const DistortionComposite& d) {
  auto opt = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  json j{{"d_trad", d.d_trad},
         {"d_llm", opt(d.d_llm)},
         {"d_llm3", opt(d.d_llm3)},
         {"d_struct_norm", opt(d.d_struct_norm)},
         {"d_total", d.d_total},
         {"partial", d.partial}};
  if (d.epsilon) {
    j["epsilon"] = *d.epsilon;
    j["within_epsilon"] = *d.within_epsilon;
  }
  return j;
}

ChapterEvaluation evaluate_chapter(std::string_view original, std::string_view reconstructed,
                                   provider::ProviderClient& client,
                                   const pipeline::TemplateSet& templates, pipeline::Language lang,
                                   UnitMode mode, const CompositeOptions& options) {
  if (original.empty() || reconstructed.empty()) {
    throw DomainError("evaluate_chapter: empty text");
  }
  ChapterEvaluation ev;
  const std::vector<std::string> whole{std::string(original), std::string(reconstructed)};
  const auto chapter_vectors = client.embed(whole).vectors;
  ev.report.cosine = cosine_similarity(Eigen::Map<const Eigen::VectorXd>(
                                           chapter_vectors[0].data(),
                                           static_cast<Eigen::Index>(chapter_vectors[0].size())),
                                       Eigen::Map<const Eigen::VectorXd>(
                                           chapter_vectors[1].data(),
                                           static_cast<Eigen::Index>(chapter_vectors[1].size())));

  // Repeated tokens share one embedding; their multiplicity becomes a weight.
  auto distinct = [mode](std::string_view text) {
    std::vector<std::string> order;
    std::map<std::string, double> count;
    for (auto& u : unit_strings(text, mode)) {
      if (count[u]++ == 0) order.push_back(u);
    }
    std::vector<double> weights;
    for (const auto& u : order) weights.push_back(count[u]);
    return std::pair{order, weights};
  };
  const auto [tokens_a, weights_a] = distinct(original);
  const auto [tokens_b, weights_b] = distinct(reconstructed);
  if (tokens_a.empty() || tokens_b.empty()) throw DomainError("evaluate_chapter: no tokens");
  std::vector<std::string> all = tokens_a;
  all.insert(all.end(), tokens_b.begin(), tokens_b.end());
  const auto token_vectors = client.embed(all).vectors;
  const std::vector<std::vector<double>> va(token_vectors.begin(),
                                            token_vectors.begin() + static_cast<std::ptrdiff_t>(tokens_a.size()));
  const std::vector<std::vector<double>> vb(token_vectors.begin() + static_cast<std::ptrdiff_t>(tokens_a.size()),
                                            token_vectors.end());
  const auto bert = bert_style_scores_weighted(
      stack_rows(va), Eigen::Map<const Eigen::VectorXd>(weights_a.data(), static_cast<Eigen::Index>(weights_a.size())),
      stack_rows(vb), Eigen::Map<const Eigen::VectorXd>(weights_b.data(), static_cast<Eigen::Index>(weights_b.size())));
  ev.report.bert_precision = bert.precision;
  ev.report.bert_recall = bert.recall;
  ev.report.bert_f1 = bert.f1;

  try {
    auto judge = judge_similarity(original, reconstructed, client, templates, lang);
    ev.report.structure = struct_distance(counts_of(judge.entities_a), counts_of(judge.entities_b));
    for (const auto& w : judge.warnings) ev.warnings.push_back(w);
    ev.report.judge = std::move(judge);
  } catch (const Error& e) {
    ev.judge_error = e.what();
    ev.warnings.push_back(std::string("judge failed: ") + e.what());
  }
  ev.composite = composite_distortion(ev.report, options);
  return ev;
}

}  // namespace novelrd::metrics
