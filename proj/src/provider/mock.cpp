#include "novelrd/provider/mock.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "novelrd/hash.hpp"
#include "novelrd/pipeline/chapter_detail.hpp"
#include "novelrd/provider/task.hpp"

namespace novelrd::provider {

using nlohmann::json;

namespace {

constexpr std::string_view kLatinFiller[] = {
    "the",   "and",   "of",    "river", "light", "road",  "stone", "wind",  "night", "quiet",
    "old",   "gate",  "rain",  "field", "cold",  "long",  "deep",  "slow",  "warm",  "far",
    "small", "green", "tower", "bell",  "smoke", "shore", "glass", "dust",  "iron",  "cloud"};

constexpr std::string_view kCjkFiller[] = {
    "的", "一", "是", "在", "不", "了", "有", "和", "这", "中", "大", "为", "上", "个",
    "我", "以", "要", "他", "时", "来", "用", "们", "生", "到", "作", "地", "于", "出",
    "就", "分", "对", "成", "会", "可", "主", "发", "年", "动", "同", "工", "也", "能"};

std::int64_t ceil_units(double alpha, std::int64_t n) {
  const double p = alpha * static_cast<double>(n);
  // Products like 0.05 * 200 land a few ulps above the integer.
  const double k = std::ceil(p - std::abs(p) * 1e-12);
  return static_cast<std::int64_t>(k);
}

bool prefers_cjk(std::string_view text, UnitMode mode) {
  if (mode == UnitMode::CJKChar) return true;
  if (mode == UnitMode::Whitespace) return false;
  const auto c = count_by_script(text);
  return c.cjk > c.other;
}

std::string hint(const GenerationRequest& req, std::string_view key, std::string fallback = {}) {
  const auto it = req.hint.find(std::string(key));
  return it == req.hint.end() ? fallback : it->second;
}

std::int64_t hint_int(const GenerationRequest& req, std::string_view key, std::int64_t fallback) {
  const auto v = hint(req, key);
  return v.empty() ? fallback : std::stoll(v);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

void push_unique(std::vector<std::string>& list, std::string item) {
  if (item.size() < 2) return;
  if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(std::move(item));
}

std::string last_title_guess(std::string_view source) {
  auto end = source.find_last_not_of(" \n\t");
  if (end == std::string_view::npos) return {};
  const auto begin = source.rfind('\n', end);
  const auto line = source.substr(begin == std::string_view::npos ? 0 : begin + 1,
                                  end - (begin == std::string_view::npos ? 0 : begin + 1) + 1);
  return take_units(line, 8);
}

json detail_json(std::string plot) {
  namespace k = pipeline::detail_keys;
  return json{{std::string(k::kPlotSummary), std::move(plot)},
              {std::string(k::kCharacters), json::array()},
              {std::string(k::kProps), json::array()},
              {std::string(k::kScenes), json::array()},
              {std::string(k::kForeshadowSet), json::array()},
              {std::string(k::kForeshadowResolved), json::array()}};
}

}  // namespace

std::string mock_compress(std::string_view text, double alpha, UnitMode mode) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("mock_compress: alpha must lie in (0, 1]");
  if (alpha == 1.0) return std::string(text);
  return take_units(text, ceil_units(alpha, count_units(text, mode)), mode);
}

std::string mock_expand(std::string_view outline, std::int64_t target_units, std::uint64_t seed,
                        UnitMode mode) {
  const auto spans = segment_units(outline, mode);
  const auto n = static_cast<std::int64_t>(spans.size());
  if (target_units < n) {
    throw DomainError("mock_expand: target " + std::to_string(target_units) +
                      " is below the outline length " + std::to_string(n));
  }
  if (target_units == n) return std::string(outline);

  const std::int64_t fill = target_units - n;
  const bool cjk = prefers_cjk(outline, mode);
  std::uint64_t state = seed ^ hash64(outline);
  auto next_word = [&]() -> std::string_view {
    const auto r = splitmix64(state);
    if (cjk) return kCjkFiller[r % std::size(kCjkFiller)];
    return kLatinFiller[r % std::size(kLatinFiller)];
  };

  std::string out;
  out.reserve(outline.size() + static_cast<std::size_t>(fill) * 6);
  if (n == 0) {
    out.append(outline);
    for (std::int64_t i = 0; i < fill; ++i) {
      if (!out.empty() && !std::isspace(static_cast<unsigned char>(out.back()))) out.push_back(' ');
      out.append(next_word());
    }
    return out;
  }

  std::size_t copied = 0;
  for (std::int64_t j = 0; j < n; ++j) {
    const auto& span = spans[static_cast<std::size_t>(j)];
    out.append(outline.substr(copied, span.end - copied));
    copied = span.end;
    const std::int64_t k = (j + 1) * fill / n - j * fill / n;
    if (k == 0) continue;
    for (std::int64_t i = 0; i < k; ++i) {
      out.push_back(' ');
      out.append(next_word());
    }
    // Keep the filler from fusing with a following non-space unit.
    if (copied < outline.size() && !std::isspace(static_cast<unsigned char>(outline[copied]))) {
      out.push_back(' ');
    }
  }
  out.append(outline.substr(copied));
  return out;
}

std::vector<double> mock_embedding(std::string_view text, int dimension) {
  if (dimension < 1) throw DomainError("mock_embedding: dimension must be positive");
  std::vector<double> acc(static_cast<std::size_t>(dimension), 0.0);
  auto add_unit = [&](std::string_view unit) {
    std::uint64_t state = hash64(unit);
    for (auto& x : acc) {
      const auto r = splitmix64(state);
      x += static_cast<double>(r >> 11) * 0x1.0p-52 - 1.0;
    }
  };
  auto units = unit_strings(text);
  if (units.empty()) add_unit(text);
  for (const auto& u : units) add_unit(u);
  double norm2 = 0.0;
  for (double x : acc) norm2 += x * x;
  const double norm = std::sqrt(norm2);
  if (norm > 0.0) {
    for (auto& x : acc) x /= norm;
  }
  return acc;
}

MockEntities mock_entities(std::string_view text) {
  MockEntities e;
  for (const auto& raw : unit_strings(text, UnitMode::Whitespace)) {
    const unsigned char c = static_cast<unsigned char>(raw.front());
    const bool marked = c == '#' || c == '@';
    if (!marked && !(c >= 'A' && c <= 'Z')) continue;
    // Only the leading ASCII run, so "Alice，" and "#sword。" lose their punctuation.
    std::size_t k = marked ? 1 : 0;
    while (k < raw.size() && std::isalnum(static_cast<unsigned char>(raw[k]))) ++k;
    if (marked && k == 1) continue;
    std::string unit = raw.substr(0, k);
    if (c == '#') {
      push_unique(e.props, std::move(unit));
    } else if (c == '@') {
      push_unique(e.scenes, std::move(unit));
    } else {
      push_unique(e.characters, std::move(unit));
    }
  }
  return e;
}

std::string mock_judge_payload(std::string_view text_a, std::string_view text_b) {
  const auto ua = unit_strings(text_a);
  const auto ub = unit_strings(text_b);
  const std::set<std::string> sa(ua.begin(), ua.end());
  const std::set<std::string> sb(ub.begin(), ub.end());
  auto bigrams = [](const std::vector<std::string>& u) {
    std::set<std::string> out;
    for (std::size_t i = 1; i < u.size(); ++i) out.insert(u[i - 1] + '\x1f' + u[i]);
    return out;
  };
  const auto ea = mock_entities(text_a);
  const auto eb = mock_entities(text_b);
  auto as_set = [](const std::vector<std::string>& v) {
    return std::set<std::string>(v.begin(), v.end());
  };
  const double style =
      ua.empty() && ub.empty()
          ? 1.0
          : static_cast<double>(std::min(ua.size(), ub.size())) /
                static_cast<double>(std::max(ua.size(), ub.size()));
  const json j{{"props_a", ea.props},
               {"characters_a", ea.characters},
               {"scenes_a", ea.scenes},
               {"props_b", eb.props},
               {"characters_b", eb.characters},
               {"scenes_b", eb.scenes},
               {"props_a_count", ea.props.size()},
               {"characters_a_count", ea.characters.size()},
               {"scenes_a_count", ea.scenes.size()},
               {"props_b_count", eb.props.size()},
               {"characters_b_count", eb.characters.size()},
               {"scenes_b_count", eb.scenes.size()},
               {"semantic_similarity", jaccard(sa, sb)},
               {"plot_similarity", jaccard(bigrams(ua), bigrams(ub))},
               {"character_similarity", jaccard(as_set(ea.characters), as_set(eb.characters))},
               {"background_similarity", jaccard(as_set(ea.scenes), as_set(eb.scenes))},
               {"style_similarity", style}};
  return j.dump();
}

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {}

std::string MockBackend::respond(const GenerationRequest& req) const {
  const UnitMode mode = req.hint.count(std::string(task::kUnitMode))
                            ? parse_unit_mode(hint(req, task::kUnitMode))
                            : options_.unit_mode;
  const std::string kind = hint(req, task::kKind);
  const std::uint64_t seed = static_cast<std::uint64_t>(hint_int(req, task::kSeed, 0));

  if (kind == task::kCompressDirect) {
    const std::string source = hint(req, task::kSource);
    std::string out = take_units(source, hint_int(req, task::kTargetUnits, 1), mode);
    if (hint(req, task::kWantLastTitle) == "1") out += "\n最后一章标题：" + last_title_guess(source);
    return out;
  }
  if (kind == task::kCompressChapter) {
    return take_units(hint(req, task::kSource), hint_int(req, task::kTargetUnits, 1), mode);
  }
  if (kind == task::kExtractDetail) {
    return detail_json(take_units(hint(req, task::kSource), hint_int(req, task::kTargetUnits, 1), mode))
        .dump();
  }
  if (kind == task::kCompressOutline) {
    const std::string source = hint(req, task::kSource);
    const double alpha = std::stod(hint(req, task::kAlpha, "1"));
    auto sections = parse_chapter_sections(source);
    if (sections.empty()) return mock_compress(source, alpha, mode);
    if (alpha == 1.0) return source;
    for (auto& s : sections) s.body = mock_compress(s.body, alpha, mode);
    return render_chapter_sections(sections);
  }
  if (kind == task::kExpandDetail) {
    const std::string outline = hint(req, task::kOutline);
    const int chapter = static_cast<int>(hint_int(req, task::kChapter, 1));
    std::string body = outline;
    for (const auto& s : parse_chapter_sections(outline)) {
      if (s.chapter == chapter) body = s.body;
    }
    const std::int64_t want = hint_int(req, task::kTargetUnits, 250);
    const std::int64_t have = count_units(body, mode);
    std::string plot = have >= want ? take_units(body, want, mode)
                                    : mock_expand(body, want, seed, mode);
    return detail_json(std::move(plot)).dump();
  }
  if (kind == task::kExpand) {
    const std::string outline = hint(req, task::kOutline);
    std::string focus = outline;
    if (req.hint.count(std::string(task::kFocusBegin))) {
      focus = unit_slice(outline, hint_int(req, task::kFocusBegin, 0),
                         hint_int(req, task::kFocusEnd, 0), mode);
    }
    const std::int64_t target =
        std::max(hint_int(req, task::kMinUnits, 1), count_units(focus, mode));
    return mock_expand(focus, target, seed, mode);
  }
  if (kind == task::kJudge) {
    return mock_judge_payload(hint(req, task::kTextA), hint(req, task::kTextB));
  }
  return take_units(req.prompt, req.max_output_units, mode);
}

GenerationResponse MockBackend::generate(const GenerationRequest& req) {
  ++generate_calls_;
  for (const auto& needle : options_.fail_if_prompt_contains) {
    if (!needle.empty() && req.prompt.find(needle) != std::string::npos) {
      throw ProviderError(400, "mock: scripted failure for prompt containing '" + needle + "'");
    }
  }
  GenerationResponse r;
  r.text = respond(req);
  r.input_tokens = estimate_tokens(req.prompt);
  r.output_tokens = estimate_tokens(r.text);
  return r;
}

std::vector<std::vector<double>> MockBackend::embed(const std::vector<std::string>& texts,
                                                    const std::string&) {
  ++embed_calls_;
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(mock_embedding(t, options_.embedding_dim));
  return out;
}

}  // namespace novelrd::provider
