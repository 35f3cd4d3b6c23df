#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "novelrd/corpus.hpp"
#include "novelrd/provider/backend.hpp"

namespace novelrd::testing {

/// Deletes the directory on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "novelrd");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

/// CJK filler paragraphs with character ("Alice"), prop ("#sword") and
/// scene ("@palace") markers sprinkled in. Deterministic in `seed`.
std::string synthetic_novel_text(std::uint64_t seed, int paragraphs, int min_len = 30, int max_len = 60);

/// Writes `count` synthetic novels plus manifest.json under `dir` and
/// returns the manifest path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir, int count, int paragraphs,
                                             std::uint64_t seed = 1);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Backend answering from a queue of scripted replies (an exception
/// pointer or a text), falling back to `fallback` when the queue is empty.
class ScriptedBackend final : public provider::Backend {
 public:
  using Reply = std::function<provider::GenerationResponse(const provider::GenerationRequest&)>;

  void push_text(std::string text);
  void push_error(std::exception_ptr e);
  void set_fallback(Reply r) { fallback_ = std::move(r); }

  provider::GenerationResponse generate(const provider::GenerationRequest& req) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_id) override;

  std::vector<provider::GenerationRequest> requests() const;
  std::int64_t calls() const { return calls_.load(); }
  std::int64_t embed_calls() const { return embed_calls_.load(); }

 private:
  mutable std::mutex mu_;
  std::deque<Reply> queue_;
  Reply fallback_;
  std::vector<provider::GenerationRequest> requests_;
  std::atomic<std::int64_t> calls_{0};
  std::atomic<std::int64_t> embed_calls_{0};
};

/// Counts generate/embed calls while forwarding to another backend.
class CountingBackend final : public provider::Backend {
 public:
  explicit CountingBackend(std::shared_ptr<provider::Backend> inner) : inner_(std::move(inner)) {}

  provider::GenerationResponse generate(const provider::GenerationRequest& req) override {
    ++generate_calls;
    return inner_->generate(req);
  }
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts,
                                         const std::string& model_id) override {
    ++embed_calls;
    return inner_->embed(texts, model_id);
  }

  std::atomic<std::int64_t> generate_calls{0};
  std::atomic<std::int64_t> embed_calls{0};

 private:
  std::shared_ptr<provider::Backend> inner_;
};

/// Byte-for-byte snapshot of every regular file under `dir`, keyed by
/// relative path.
std::map<std::string, std::string> snapshot_tree(const std::filesystem::path& dir);

}  // namespace novelrd::testing
