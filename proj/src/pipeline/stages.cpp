#include "novelrd/pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <regex>

#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"
#include "novelrd/parallel.hpp"
#include "novelrd/provider/task.hpp"

namespace novelrd::pipeline {

using nlohmann::json;
namespace task = provider::task;

namespace {

constexpr std::int64_t kDetailPlotMin = 200;
constexpr std::int64_t kDetailPlotMax = 300;
constexpr std::int64_t kDetailPlotTarget = 250;
constexpr std::int64_t kDetailOutputUnits = 2048;

void require_context(const PipelineContext& ctx) {
  if (ctx.client == nullptr || ctx.templates == nullptr) {
    throw ConfigError("pipeline context needs a provider client and templates");
  }
}

provider::GenerationRequest make_request(const PipelineContext& ctx, std::string prompt,
                                         std::int64_t max_units, provider::TaskHint hint) {
  provider::GenerationRequest req;
  req.prompt = std::move(prompt);
  req.max_output_units = std::max<std::int64_t>(1, max_units);
  req.temperature = ctx.client->config().temperature;
  hint[std::string(task::kUnitMode)] = std::string(to_string(ctx.unit_mode));
  req.hint = std::move(hint);
  return req;
}

provider::CallOutcome call(const PipelineContext& ctx, const provider::GenerationRequest& req,
                           const std::string& what) {
  try {
    return ctx.client->generate_logged(req);
  } catch (const provider::TransportError& e) {
    throw StageError(what + ": " + e.what());
  } catch (const provider::ProviderError& e) {
    throw StageError(what + ": " + e.what());
  } catch (const provider::TransientError& e) {
    throw StageError(what + ": " + e.what());
  }
}

/// Parses a chapter detail, re-asking once with the raw-JSON suffix when the
/// first payload fails validation.
DetailParse request_detail(const PipelineContext& ctx, provider::GenerationRequest req,
                           const std::string& what, std::vector<provider::CacheKey>& provenance) {
  auto first = call(ctx, req, what);
  provenance.push_back(first.key);
  try {
    return validate_chapter_detail(first.response.text);
  } catch (const SchemaError&) {
    req.prompt += ctx.templates->get(TemplateId::JsonRepair, ctx.language);
    auto second = call(ctx, req, what + " (repair)");
    provenance.push_back(second.key);
    try {
      auto parsed = validate_chapter_detail(second.response.text);
      parsed.warnings.push_back("payload repaired by a second request");
      return parsed;
    } catch (const SchemaError& e) {
      throw SchemaError(e.key(), e.payload(), what + ": " + e.what());
    }
  }
}

std::string band_flag(std::string_view what, std::int64_t got, std::int64_t want, double tol) {
  const double lo = (1.0 - tol) * static_cast<double>(want);
  const double hi = (1.0 + tol) * static_cast<double>(want);
  const auto g = static_cast<double>(got);
  if (g >= lo && g <= hi) return {};
  return std::string(what) + " length " + std::to_string(got) + " outside +/-" +
         std::to_string(static_cast<int>(std::lround(tol * 100))) + "% of " + std::to_string(want);
}

void add_flag(std::vector<std::string>& flags, std::string flag) {
  if (!flag.empty()) flags.push_back(std::move(flag));
}

std::int64_t section_units(const std::vector<ChapterSection>& sections, UnitMode mode) {
  std::int64_t n = 0;
  for (const auto& s : sections) n += count_units(s.body, mode);
  return n;
}

const Chapter& find_chapter(const std::vector<Chapter>& chapters, int index) {
  for (const auto& c : chapters) {
    if (c.index == index) return c;
  }
  throw StageError("chapter " + std::to_string(index) + " is outside the novel's chapter range");
}

/// Units [begin, end) of a free-text outline that correspond to one source
/// chapter, in proportion to the chapters' cumulative sizes.
std::pair<std::int64_t, std::int64_t> proportional_focus(std::int64_t outline_units,
                                                         const std::vector<Chapter>& chapters,
                                                         int index) {
  std::int64_t total = 0;
  std::int64_t before = 0;
  std::int64_t through = 0;
  for (const auto& c : chapters) {
    total += c.unit_count;
    if (c.index < index) before += c.unit_count;
    if (c.index <= index) through += c.unit_count;
  }
  if (total == 0) return {0, outline_units};
  return {outline_units * before / total, outline_units * through / total};
}

std::uint64_t stream_seed(const PipelineContext& ctx, TemplateId id) {
  return derive_seed(ctx.seed, file_stem(id));
}

}  // namespace

std::string_view to_string(OutlineKind k) {
  switch (k) {
    case OutlineKind::Direct: return "direct";
    case OutlineKind::Details: return "details";
    case OutlineKind::Summaries: return "summaries";
    case OutlineKind::Sectioned: return "sectioned";
  }
  return "?";
}

std::pair<std::string, std::string> split_last_title(std::string_view text) {
  static const std::regex trailer(
      R"(^\s*(?:最后一章(?:节)?(?:的)?标题|[Tt]itle of the last chapter|[Ll]ast chapter title)\s*(?:：|:)\s*(.*?)\s*$)");
  std::string body(text);
  while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
  const auto nl = body.rfind('\n');
  const std::string last = nl == std::string::npos ? body : body.substr(nl + 1);
  std::smatch m;
  if (!std::regex_match(last, m, trailer)) return {std::string(text), {}};
  std::string rest = nl == std::string::npos ? std::string() : body.substr(0, nl);
  while (!rest.empty() && (rest.back() == '\n' || rest.back() == ' ')) rest.pop_back();
  return {rest, m[1].str()};
}

OutlineArtifact compress_stage1(const std::vector<Chapter>& chapters, const Ratio& alpha1,
                                bool structured, const PipelineContext& ctx) {
  require_context(ctx);
  if (chapters.empty()) throw DomainError("compress_stage1: no chapters");
  if (alpha1.num() == 0 || alpha1.num() >= alpha1.den()) {
    throw DomainError("compress_stage1: alpha1 must lie in (0, 1)");
  }

  struct Slot {
    std::vector<provider::CacheKey> keys;
    DetailParse detail;
    std::string summary;
  };
  std::vector<Slot> slots(chapters.size());
  const TemplateId tmpl = structured ? TemplateId::Stage1Extract : TemplateId::Stage1Summary;

  parallel_for(chapters.size(), ctx.parallelism, [&](std::size_t i) {
    const Chapter& ch = chapters[i];
    const std::int64_t target = std::max<std::int64_t>(1, alpha1.scale_ceil(ch.unit_count));
    const std::string prompt = ctx.templates->render(
        tmpl, ctx.language,
        {{"chapter_text", ch.text}, {"target_units", std::to_string(target)}});
    provider::TaskHint hint{
        {std::string(task::kKind),
         std::string(structured ? task::kExtractDetail : task::kCompressChapter)},
        {std::string(task::kSource), ch.text},
        {std::string(task::kTargetUnits), std::to_string(target)}};
    const std::string what = "stage 1, chapter " + std::to_string(ch.index);
    if (structured) {
      auto req = make_request(ctx, prompt, kDetailOutputUnits + target * 2, std::move(hint));
      slots[i].detail = request_detail(ctx, std::move(req), what, slots[i].keys);
    } else {
      auto req = make_request(ctx, prompt, target + target / 2 + 64, std::move(hint));
      auto out = call(ctx, req, what);
      slots[i].keys.push_back(out.key);
      slots[i].summary = out.response.text;
    }
  });

  OutlineArtifact a;
  a.level = 1;
  a.kind = structured ? OutlineKind::Details : OutlineKind::Summaries;
  std::string source;
  for (std::size_t i = 0; i < chapters.size(); ++i) {
    const Chapter& ch = chapters[i];
    source += ch.text;
    a.input_units += ch.unit_count;
    a.target_units += std::max<std::int64_t>(1, alpha1.scale_ceil(ch.unit_count));
    a.provenance.insert(a.provenance.end(), slots[i].keys.begin(), slots[i].keys.end());
    if (structured) {
      auto& d = slots[i].detail;
      a.unit_count += detail_units(d.detail, ctx.unit_mode);
      a.sections.push_back({ch.index, render_detail(d.detail)});
      a.details.push_back(std::move(d.detail));
      if (!d.extras.empty()) a.sidecar[std::to_string(ch.index)] = d.extras;
      for (auto& w : d.warnings) a.flags.push_back("chapter " + std::to_string(ch.index) + ": " + w);
      if (d.fences_stripped) {
        a.flags.push_back("chapter " + std::to_string(ch.index) + ": code fences stripped");
      }
    } else {
      a.unit_count += count_units(slots[i].summary, ctx.unit_mode);
      a.sections.push_back({ch.index, slots[i].summary});
    }
  }
  a.text = render_chapter_sections(a.sections);
  a.source_hash = sha256_hex(source);
  add_flag(a.flags, band_flag("stage 1", a.unit_count, a.target_units, ctx.length_tolerance));
  return a;
}

OutlineArtifact compress_stage2(const OutlineArtifact& stage1, const Ratio& alpha2,
                                const PipelineContext& ctx) {
  require_context(ctx);
  if (stage1.level != 1) throw DomainError("compress_stage2: input must be a level-1 outline");
  if (alpha2.num() == 0 || alpha2.num() > alpha2.den()) {
    throw DomainError("compress_stage2: alpha2 must lie in (0, 1]");
  }
  const auto chapter_count = static_cast<std::int64_t>(std::max<std::size_t>(1, stage1.sections.size()));
  const std::int64_t target = std::max<std::int64_t>(1, alpha2.scale_ceil(stage1.unit_count));
  const std::int64_t per_chapter = (target + chapter_count - 1) / chapter_count;

  const std::string prompt = ctx.templates->render(
      TemplateId::Stage2Compress, ctx.language,
      {{"target_units", std::to_string(target)},
       {"per_chapter_units", std::to_string(per_chapter)},
       {"chapter_count", std::to_string(chapter_count)},
       {"detailed_outline", stage1.text}});
  provider::TaskHint hint{{std::string(task::kKind), std::string(task::kCompressOutline)},
                          {std::string(task::kSource), stage1.text},
                          {std::string(task::kAlpha), alpha2.str()}};
  const std::int64_t budget = target + target / 2 + 16 * chapter_count + 64;
  auto out = call(ctx, make_request(ctx, prompt, budget, std::move(hint)), "stage 2");

  OutlineArtifact a;
  a.level = 2;
  a.kind = OutlineKind::Sectioned;
  a.text = out.response.text;
  a.provenance.push_back(out.key);
  a.input_units = stage1.unit_count;
  a.target_units = target;
  a.source_hash = sha256_hex(stage1.text);
  a.sections = parse_chapter_sections(a.text);
  if (a.sections.empty()) {
    a.kind = OutlineKind::Direct;
    a.unit_count = count_units(a.text, ctx.unit_mode);
    a.flags.push_back("stage 2 output has no chapter markers");
  } else {
    a.unit_count = section_units(a.sections, ctx.unit_mode);
    std::vector<int> want;
    std::vector<int> got;
    for (const auto& s : stage1.sections) want.push_back(s.chapter);
    for (const auto& s : a.sections) got.push_back(s.chapter);
    if (want != got) a.flags.push_back("stage 2 chapter numbers differ from stage 1");
  }
  add_flag(a.flags, band_flag("stage 2", a.unit_count, target, ctx.length_tolerance));
  return a;
}

OutlineArtifact compress_direct(const Novel& novel, std::int64_t target_units,
                                const PipelineContext& ctx) {
  require_context(ctx);
  if (target_units < 1) throw DomainError("compress_direct: target_units must be at least 1");
  const std::string prompt =
      ctx.templates->render(TemplateId::DirectCompress, ctx.language,
                            {{"target_units", std::to_string(target_units)},
                             {"full_novel_text", novel.text()}});
  provider::TaskHint hint{{std::string(task::kKind), std::string(task::kCompressDirect)},
                          {std::string(task::kSource), novel.text()},
                          {std::string(task::kTargetUnits), std::to_string(target_units)},
                          {std::string(task::kWantLastTitle), "1"}};
  auto out = call(ctx, make_request(ctx, prompt, target_units + target_units / 2 + 128,
                                    std::move(hint)),
                  "direct compression of " + novel.id());

  OutlineArtifact a;
  a.level = 1;
  a.kind = OutlineKind::Direct;
  auto [body, title] = split_last_title(out.response.text);
  a.text = std::move(body);
  a.last_chapter_title = std::move(title);
  a.provenance.push_back(out.key);
  a.input_units = novel.unit_count();
  a.target_units = target_units;
  a.unit_count = count_units(a.text, ctx.unit_mode);
  a.source_hash = sha256_hex(novel.text());
  if (a.last_chapter_title.empty()) a.flags.push_back("last chapter title missing");
  if (static_cast<double>(a.unit_count) >
      (1.0 + ctx.length_tolerance) * static_cast<double>(target_units)) {
    a.flags.push_back("direct outline length " + std::to_string(a.unit_count) + " exceeds " +
                      std::to_string(target_units) + " by more than the tolerance");
  }
  return a;
}

ReconstructionResult expand_to_chapter(const OutlineArtifact& outline,
                                       const std::vector<Chapter>& chapters, int chapter_index,
                                       std::int64_t min_units, Variant variant,
                                       const PipelineContext& ctx) {
  require_context(ctx);
  if (min_units < 1) throw DomainError("expand_to_chapter: min_units must be positive");
  find_chapter(chapters, chapter_index);
  const bool needs_level2 =
      variant == Variant::MixedTwoStage || variant == Variant::HierarchicalTwoStage;
  if (needs_level2 != (outline.level == 2)) {
    throw StageError("expand_to_chapter: a level-" + std::to_string(outline.level) +
                     " outline does not fit variant " + std::string(to_string(variant)));
  }

  ReconstructionResult r;
  r.chapter_index = chapter_index;
  r.min_units = min_units;
  const std::string chap = std::to_string(chapter_index);

  // The slice of the outline this chapter is about, for deterministic backends.
  std::string focus_outline = outline.text;
  bool focused = false;
  std::pair<std::int64_t, std::int64_t> focus{0, 0};
  const ChapterSection* section = nullptr;
  for (const auto& s : outline.sections) {
    if (s.chapter == chapter_index) section = &s;
  }
  if (!outline.sections.empty()) {
    if (section == nullptr) throw StageError("chapter " + chap + " is missing from the outline");
    focus_outline = section->body;
  } else {
    focus = proportional_focus(count_units(outline.text, ctx.unit_mode), chapters, chapter_index);
    focused = true;
  }

  std::string outline_text = outline.text;
  if (variant == Variant::HierarchicalTwoStage) {
    const std::string prompt = ctx.templates->render(TemplateId::Stage2ExpandDetail, ctx.language,
                                                     {{"n", chap}, {"outline", outline.text}});
    provider::TaskHint hint{
        {std::string(task::kKind), std::string(task::kExpandDetail)},
        {std::string(task::kOutline), outline.text},
        {std::string(task::kChapter), chap},
        {std::string(task::kTargetUnits), std::to_string(kDetailPlotTarget)},
        {std::string(task::kSeed), std::to_string(stream_seed(ctx, TemplateId::Stage2ExpandDetail))}};
    auto parsed = request_detail(ctx, make_request(ctx, prompt, kDetailOutputUnits, std::move(hint)),
                                 "detail expansion, chapter " + chap, r.provenance);
    const auto plot_units = count_units(parsed.detail.plot_summary, ctx.unit_mode);
    if (plot_units < kDetailPlotMin || plot_units > kDetailPlotMax) {
      r.flags.push_back("plot summary has " + std::to_string(plot_units) +
                        " units, outside 200-300");
    }
    for (auto& w : parsed.warnings) r.flags.push_back(std::move(w));
    outline_text = render_detail(parsed.detail);
    focus_outline = outline_text;
    focused = false;
    r.intermediate = std::move(parsed.detail);
  }

  const TemplateId tmpl =
      variant == Variant::LongWriterBaseline ? TemplateId::LongWriterExpand : TemplateId::DirectExpand;
  const std::string prompt = ctx.templates->render(
      tmpl, ctx.language,
      {{"chap_num", chap}, {"min_units", std::to_string(min_units)}, {"outline_text", outline_text}});
  provider::TaskHint hint{{std::string(task::kKind), std::string(task::kExpand)},
                          {std::string(task::kOutline), focused ? outline_text : focus_outline},
                          {std::string(task::kMinUnits), std::to_string(min_units)},
                          {std::string(task::kChapter), chap},
                          {std::string(task::kSeed), std::to_string(stream_seed(ctx, tmpl))}};
  if (focused) {
    hint[std::string(task::kFocusBegin)] = std::to_string(focus.first);
    hint[std::string(task::kFocusEnd)] = std::to_string(focus.second);
  }
  auto out = call(ctx, make_request(ctx, prompt, min_units + min_units / 2 + 64, std::move(hint)),
                  "expansion, chapter " + chap);
  r.provenance.push_back(out.key);
  r.reconstructed_text = out.response.text;
  r.unit_count = count_units(r.reconstructed_text, ctx.unit_mode);
  if (static_cast<double>(r.unit_count) < 0.9 * static_cast<double>(min_units)) {
    r.flags.push_back("under length: " + std::to_string(r.unit_count) + " units for a minimum of " +
                      std::to_string(min_units));
  }
  return r;
}

json to_json(const OutlineArtifact& a) {
  json j{{"level", a.level},
         {"kind", to_string(a.kind)},
         {"config_id", a.config_id},
         {"unit_count", a.unit_count},
         {"input_units", a.input_units},
         {"target_units", a.target_units},
         {"text", a.text},
         {"source_hash", a.source_hash},
         {"flags", a.flags}};
  json sections = json::array();
  for (const auto& s : a.sections) sections.push_back({{"chapter", s.chapter}, {"body", s.body}});
  j["sections"] = sections;
  if (a.kind == OutlineKind::Details) {
    json details = json::array();
    for (const auto& d : a.details) details.push_back(to_json(d));
    j["details"] = details;
    j["sidecar"] = a.sidecar;
  }
  if (a.kind == OutlineKind::Direct && a.level == 1) j["last_chapter_title"] = a.last_chapter_title;
  json keys = json::array();
  for (const auto& k : a.provenance) keys.push_back(k.hex);
  j["provenance"] = keys;
  return j;
}

OutlineArtifact artifact_from_json(const json& j) {
  OutlineArtifact a;
  a.level = j.at("level").get<int>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "direct") a.kind = OutlineKind::Direct;
  else if (kind == "details") a.kind = OutlineKind::Details;
  else if (kind == "summaries") a.kind = OutlineKind::Summaries;
  else if (kind == "sectioned") a.kind = OutlineKind::Sectioned;
  else throw SchemaError("kind", j.dump(), "unknown outline kind " + kind);
  a.config_id = j.value("config_id", std::string());
  a.unit_count = j.at("unit_count").get<std::int64_t>();
  a.input_units = j.value("input_units", std::int64_t{0});
  a.target_units = j.value("target_units", std::int64_t{0});
  a.text = j.at("text").get<std::string>();
  a.source_hash = j.value("source_hash", std::string());
  a.flags = j.value("flags", std::vector<std::string>{});
  for (const auto& s : j.value("sections", json::array())) {
    a.sections.push_back({s.at("chapter").get<int>(), s.at("body").get<std::string>()});
  }
  for (const auto& d : j.value("details", json::array())) a.details.push_back(detail_from_json(d));
  a.sidecar = j.value("sidecar", json::object());
  a.last_chapter_title = j.value("last_chapter_title", std::string());
  for (const auto& k : j.value("provenance", json::array())) a.provenance.push_back({k.get<std::string>()});
  return a;
}

json to_json(const ReconstructionResult& r) {
  json keys = json::array();
  for (const auto& k : r.provenance) keys.push_back(k.hex);
  json j{{"config_id", r.config_id},
         {"novel_id", r.novel_id},
         {"chapter_index", r.chapter_index},
         {"unit_count", r.unit_count},
         {"min_units", r.min_units},
         {"artifacts", r.artifacts},
         {"provenance", keys},
         {"flags", r.flags},
         {"reconstructed_text", r.reconstructed_text}};
  j["intermediate"] = r.intermediate ? to_json(*r.intermediate) : json(nullptr);
  return j;
}

ReconstructionResult reconstruction_from_json(const json& j) {
  ReconstructionResult r;
  r.config_id = j.at("config_id").get<std::string>();
  r.novel_id = j.at("novel_id").get<std::string>();
  r.chapter_index = j.at("chapter_index").get<int>();
  r.unit_count = j.at("unit_count").get<std::int64_t>();
  r.min_units = j.value("min_units", std::int64_t{0});
  r.artifacts = j.value("artifacts", std::vector<std::string>{});
  for (const auto& k : j.value("provenance", json::array())) r.provenance.push_back({k.get<std::string>()});
  r.flags = j.value("flags", std::vector<std::string>{});
  r.reconstructed_text = j.at("reconstructed_text").get<std::string>();
  if (j.contains("intermediate") && !j.at("intermediate").is_null()) {
    r.intermediate = detail_from_json(j.at("intermediate"));
  }
  return r;
}

}  // namespace novelrd::pipeline
