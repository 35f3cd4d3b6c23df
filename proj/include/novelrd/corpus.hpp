#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "novelrd/units.hpp"

namespace novelrd {

enum class Genre { Urban, Romance, Fantasy, Historical };

/// Strata in sampling-frame order (U, R, F, H).
inline constexpr std::array<Genre, 4> kAllGenres = {Genre::Urban, Genre::Romance, Genre::Fantasy,
                                                    Genre::Historical};

Genre parse_genre(std::string_view name);
std::string_view to_string(Genre genre);

/// A source text. Immutable once built; unit_count always equals
/// count_units(text, mode).
class Novel {
 public:
  Novel(std::string id, Genre genre, std::string title, std::string text,
        UnitMode mode = UnitMode::Mixed);

  const std::string& id() const noexcept { return id_; }
  Genre genre() const noexcept { return genre_; }
  const std::string& title() const noexcept { return title_; }
  const std::string& text() const noexcept { return text_; }
  std::int64_t unit_count() const noexcept { return unit_count_; }
  UnitMode unit_mode() const noexcept { return mode_; }

 private:
  std::string id_;
  Genre genre_;
  std::string title_;
  std::string text_;
  UnitMode mode_;
  std::int64_t unit_count_;
};

struct Chapter {
  std::string novel_id;
  int index = 0;                ///< 1-based
  std::string text;
  std::int64_t unit_count = 0;
  std::size_t byte_offset = 0;  ///< start of this chapter in the novel text
};

struct ManifestEntry {
  std::filesystem::path path;
  Genre genre = Genre::Urban;
  std::string title;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  UnitMode unit_counting_mode = UnitMode::Mixed;
};

/// Parse a manifest JSON array of {"path", "genre", "title"}. Relative paths
/// resolve against the manifest's directory.
CorpusManifest load_manifest(const std::filesystem::path& manifest_path,
                             UnitMode mode = UnitMode::Mixed);
CorpusManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir,
                              UnitMode mode = UnitMode::Mixed);

/// Novel ids are derived from file stems, disambiguated by a numeric suffix.
std::vector<Novel> ingest_corpus(const CorpusManifest& manifest);

/// Read a UTF-8 text file and normalize line endings / BOM.
std::string read_text_file(const std::filesystem::path& path);

/// Chapter sizes land within +/-20% of target_units (except the last). Cuts
/// prefer blank-line boundaries, then single newlines, then the exact limit.
/// Concatenating the chapters reproduces the novel text byte for byte.
std::vector<Chapter> split_chapters(const Novel& novel, std::int64_t target_units);

/// Content hash of a corpus: paths, metadata and text hashes, in order.
std::string corpus_hash(const std::vector<Novel>& novels);

}  // namespace novelrd
