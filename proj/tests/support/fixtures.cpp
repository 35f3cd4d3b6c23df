#include "fixtures.hpp"

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "novelrd/provider/mock.hpp"

namespace novelrd::testing {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFiller[] = {
    "的", "一", "是", "在", "不", "了", "有", "和", "人", "这", "中", "大", "为", "上", "个",
    "国", "我", "以", "要", "他", "时", "来", "用", "们", "生", "到", "作", "地", "于", "出",
    "就", "分", "对", "成", "会", "可", "主", "发", "年", "动", "同", "工", "也", "能", "下",
    "过", "子", "说", "产", "种", "面", "而", "方", "后", "多", "定", "行", "学", "法", "所",
    "风", "雨", "山", "河", "城", "门", "夜", "月", "花", "雪", "剑", "马", "船", "灯", "书"};

constexpr const char* kMarkers[] = {"Alice", "Bob", "Clara", "#sword", "#lamp", "@palace", "@harbor"};

}  // namespace

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string synthetic_novel_text(std::uint64_t seed, int paragraphs, int min_len, int max_len) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, std::size(kFiller) - 1);
  std::uniform_int_distribution<std::size_t> marker(0, std::size(kMarkers) - 1);
  std::string out;
  for (int p = 0; p < paragraphs; ++p) {
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      out += kFiller[pick(rng)];
      if (i % 17 == 8) {
        out += " ";
        out += kMarkers[marker(rng)];
        out += " ";
      }
    }
    out += "。\n\n";
  }
  return out;
}

fs::path write_synthetic_corpus(const fs::path& dir, int count, int paragraphs, std::uint64_t seed) {
  static constexpr const char* kGenres[] = {"urban", "romance", "fantasy", "historical"};
  fs::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    const std::string file = "novel" + std::to_string(i + 1) + ".txt";
    write_text(dir / file, synthetic_novel_text(seed * 1000 + static_cast<std::uint64_t>(i), paragraphs));
    manifest.push_back({{"path", file}, {"genre", kGenres[i % 4]}, {"title", "Novel " + std::to_string(i + 1)}});
  }
  const fs::path path = dir / "manifest.json";
  write_text(path, manifest.dump(2));
  return path;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void ScriptedBackend::push_text(std::string text) {
  std::lock_guard lock(mu_);
  queue_.push_back([text = std::move(text)](const provider::GenerationRequest&) {
    return provider::GenerationResponse{text, 10, 10, 0};
  });
}

void ScriptedBackend::push_error(std::exception_ptr e) {
  std::lock_guard lock(mu_);
  queue_.push_back([e](const provider::GenerationRequest&) -> provider::GenerationResponse {
    std::rethrow_exception(e);
  });
}

provider::GenerationResponse ScriptedBackend::generate(const provider::GenerationRequest& req) {
  ++calls_;
  Reply reply;
  {
    std::lock_guard lock(mu_);
    requests_.push_back(req);
    if (!queue_.empty()) {
      reply = std::move(queue_.front());
      queue_.pop_front();
    } else {
      reply = fallback_;
    }
  }
  if (!reply) throw provider::ProviderError(400, "scripted backend has no reply left");
  return reply(req);
}

std::vector<std::vector<double>> ScriptedBackend::embed(const std::vector<std::string>& texts,
                                                        const std::string&) {
  ++embed_calls_;
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(provider::mock_embedding(t, 16));
  return out;
}

std::vector<provider::GenerationRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::map<std::string, std::string> snapshot_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = read_text(e.path());
  }
  return out;
}

}  // namespace novelrd::testing
