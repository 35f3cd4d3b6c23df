#include "novelrd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"

namespace novelrd {

using nlohmann::json;

Genre parse_genre(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "urban") return Genre::Urban;
  if (lower == "romance") return Genre::Romance;
  if (lower == "fantasy") return Genre::Fantasy;
  if (lower == "historical") return Genre::Historical;
  throw ConfigError("unknown genre '" + std::string(name) + "'");
}

std::string_view to_string(Genre genre) {
  switch (genre) {
    case Genre::Urban: return "urban";
    case Genre::Romance: return "romance";
    case Genre::Fantasy: return "fantasy";
    case Genre::Historical: return "historical";
  }
  return "urban";
}

Novel::Novel(std::string id, Genre genre, std::string title, std::string text, UnitMode mode)
    : id_(std::move(id)),
      genre_(genre),
      title_(std::move(title)),
      text_(std::move(text)),
      mode_(mode),
      unit_count_(count_units(text_, mode)) {}

CorpusManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir,
                              UnitMode mode) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("corpus manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("corpus manifest must be a JSON array");

  CorpusManifest manifest;
  manifest.unit_counting_mode = mode;
  std::set<std::filesystem::path> seen;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("path") || !item.contains("genre")) {
      throw ConfigError("corpus manifest entry needs \"path\" and \"genre\": " + item.dump());
    }
    ManifestEntry entry;
    entry.path = item.at("path").get<std::string>();
    if (entry.path.is_relative()) entry.path = base_dir / entry.path;
    entry.path = entry.path.lexically_normal();
    entry.genre = parse_genre(item.at("genre").get<std::string>());
    entry.title = item.value("title", entry.path.stem().string());
    if (!seen.insert(entry.path).second) {
      throw ConfigError("duplicate corpus path: " + entry.path.string());
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

CorpusManifest load_manifest(const std::filesystem::path& manifest_path, UnitMode mode) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw IngestError(manifest_path.string(), "cannot read corpus manifest");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), manifest_path.parent_path(), mode);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(path.string(), "cannot read corpus file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return normalize_text(buf.str());
}

std::vector<Novel> ingest_corpus(const CorpusManifest& manifest) {
  std::vector<Novel> novels;
  novels.reserve(manifest.entries.size());
  std::map<std::string, int> stem_uses;
  for (const auto& entry : manifest.entries) {
    std::string text = read_text_file(entry.path);
    if (count_units(text, manifest.unit_counting_mode) == 0) {
      throw IngestError(entry.path.string(), "empty corpus file");
    }
    std::string id = entry.path.stem().string();
    const int use = ++stem_uses[id];
    if (use > 1) id += "-" + std::to_string(use);
    novels.emplace_back(std::move(id), entry.genre, entry.title, std::move(text),
                        manifest.unit_counting_mode);
  }
  return novels;
}

namespace {

enum class Boundary { None, Line, Paragraph };

Boundary classify_gap(std::string_view gap) {
  const auto first = gap.find('\n');
  if (first == std::string_view::npos) return Boundary::None;
  for (std::size_t i = first + 1; i < gap.size(); ++i) {
    if (gap[i] == '\n') return Boundary::Paragraph;
    if (gap[i] != ' ' && gap[i] != '\t') break;
  }
  // Blank lines holding other whitespace still count as paragraph breaks.
  if (gap.find('\n', first + 1) != std::string_view::npos) return Boundary::Paragraph;
  return Boundary::Line;
}

}  // namespace

std::vector<Chapter> split_chapters(const Novel& novel, std::int64_t target_units) {
  if (target_units < 1) throw DomainError("split_chapters: target_units must be >= 1");
  const std::string_view text = novel.text();
  const auto spans = segment_units(text, novel.unit_mode());
  const auto n = static_cast<std::int64_t>(spans.size());
  if (n < 1) throw DomainError("split_chapters: novel '" + novel.id() + "' has no text units");

  const auto lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(0.8 * target_units)));
  const auto hi = std::max<std::int64_t>(lo, static_cast<std::int64_t>(std::floor(1.2 * target_units)));

  auto gap_before = [&](std::int64_t k) {
    const auto& prev = spans[static_cast<std::size_t>(k - 1)];
    const auto& next = spans[static_cast<std::size_t>(k)];
    return text.substr(prev.end, next.begin - prev.end);
  };

  std::vector<Chapter> chapters;
  std::int64_t start = 0;
  while (start < n) {
    std::int64_t cut = n;
    if (n - start > hi) {
      const std::int64_t ideal = start + target_units;
      std::int64_t best_para = -1;
      std::int64_t best_line = -1;
      auto closer = [&](std::int64_t cand, std::int64_t best) {
        return best < 0 || std::llabs(cand - ideal) < std::llabs(best - ideal);
      };
      for (std::int64_t k = start + lo; k <= std::min(start + hi, n - 1); ++k) {
        switch (classify_gap(gap_before(k))) {
          case Boundary::Paragraph:
            if (closer(k, best_para)) best_para = k;
            break;
          case Boundary::Line:
            if (closer(k, best_line)) best_line = k;
            break;
          case Boundary::None:
            break;
        }
      }
      cut = best_para >= 0 ? best_para : best_line >= 0 ? best_line : ideal;
    }
    const std::size_t begin = chapters.empty() ? 0 : spans[static_cast<std::size_t>(start)].begin;
    const std::size_t end = cut == n ? text.size() : spans[static_cast<std::size_t>(cut)].begin;
    Chapter ch;
    ch.novel_id = novel.id();
    ch.index = static_cast<int>(chapters.size()) + 1;
    ch.text = std::string(text.substr(begin, end - begin));
    ch.unit_count = cut - start;
    ch.byte_offset = begin;
    chapters.push_back(std::move(ch));
    start = cut;
  }
  return chapters;
}

std::string corpus_hash(const std::vector<Novel>& novels) {
  std::string acc;
  for (const auto& n : novels) {
    acc += n.id();
    acc += '\t';
    acc += to_string(n.genre());
    acc += '\t';
    acc += n.title();
    acc += '\t';
    acc += sha256_hex(n.text());
    acc += '\n';
  }
  return sha256_hex(acc);
}

}  // namespace novelrd
