#include "novelrd/pipeline/run.hpp"

#include <condition_variable>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "novelrd/error.hpp"

namespace novelrd::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ItemStatus parse_status(const std::string& s) {
  if (s == "done") return ItemStatus::Done;
  if (s == "failed") return ItemStatus::Failed;
  if (s == "skipped") return ItemStatus::Skipped;
  throw SchemaError("status", s, "unknown item status " + s);
}

json item_event(const ItemRecord& rec) {
  json j{{"event", "item"},
         {"config", rec.key.config_id},
         {"novel", rec.key.novel_id},
         {"chapter", rec.key.chapter_index},
         {"status", to_string(rec.status)}};
  if (!rec.error.empty()) j["error"] = rec.error;
  if (!rec.flags.empty()) j["flags"] = rec.flags;
  return j;
}

}  // namespace

std::string_view to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::Done: return "done";
    case ItemStatus::Failed: return "failed";
    case ItemStatus::Skipped: return "skipped";
  }
  return "?";
}

std::string safe_component(std::string_view id) {
  std::string out;
  for (char c : id) {
    if (c == '*') {
      out += "star";
    } else if (c == '/' || c == '\\' || c == ':' || c == '?' || c == '"' || c == '<' || c == '>' ||
               c == '|') {
      out += '_';
    } else {
      out += c;
    }
  }
  return out;
}

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) throw ConfigError("cannot create run directory " + dir_.string());
}

void RunStore::append(const json& event) {
  std::lock_guard lock(mu_);
  std::ofstream out(manifest_path(), std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot append to " + manifest_path().string());
  out << event.dump() << '\n';
  out.flush();
}

std::vector<json> RunStore::events() const {
  std::lock_guard lock(mu_);
  std::vector<json> out;
  std::ifstream in(manifest_path(), std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      // A torn final line from an interrupted write is ignored.
    }
  }
  return out;
}

std::map<ItemKey, ItemRecord> RunStore::item_states() const {
  std::map<ItemKey, ItemRecord> states;
  for (const auto& e : events()) {
    if (e.value("event", "") != "item") continue;
    ItemRecord rec;
    rec.key = {e.at("config").get<std::string>(), e.at("novel").get<std::string>(),
               e.at("chapter").get<int>()};
    rec.status = parse_status(e.at("status").get<std::string>());
    rec.error = e.value("error", std::string());
    rec.flags = e.value("flags", std::vector<std::string>{});
    states[rec.key] = std::move(rec);
  }
  return states;
}

std::string RunStore::artifact_ref(const std::string& config_id, const std::string& novel_id,
                                   int level) {
  return safe_component(config_id) + "/" + safe_component(novel_id) + "/level" +
         std::to_string(level);
}

std::string RunStore::write_artifact(const OutlineArtifact& artifact, const std::string& novel_id) {
  const std::string ref = artifact_ref(artifact.config_id, novel_id, artifact.level);
  write_file_atomic(dir_ / "artifacts" / (ref + ".json"), to_json(artifact).dump(2) + "\n");
  return ref;
}

fs::path RunStore::reconstruction_path(const ItemKey& key) const {
  return dir_ / "reconstructions" / safe_component(key.config_id) / safe_component(key.novel_id) /
         ("chapter_" + std::to_string(key.chapter_index) + ".json");
}

void RunStore::write_reconstruction(const ReconstructionResult& r) {
  write_file_atomic(reconstruction_path({r.config_id, r.novel_id, r.chapter_index}),
                    to_json(r).dump(2) + "\n");
}

ReconstructionResult RunStore::read_reconstruction(const ItemKey& key) const {
  const auto path = reconstruction_path(key);
  try {
    return reconstruction_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw SchemaError("", path.string(), "malformed reconstruction file " + path.string() + ": " + e.what());
  }
}

std::vector<ReconstructionResult> RunStore::done_reconstructions() const {
  std::vector<ReconstructionResult> out;
  for (const auto& [key, rec] : item_states()) {
    if (rec.status == ItemStatus::Done) out.push_back(read_reconstruction(key));
  }
  return out;
}

std::vector<OutlineArtifact> compress_for(const PipelineConfig& config, const Novel& novel,
                                          const std::vector<Chapter>& chapters,
                                          const PipelineContext& ctx) {
  config.validate();
  std::vector<OutlineArtifact> levels;
  switch (config.variant) {
    case Variant::SingleStage:
    case Variant::LongWriterBaseline: {
      const std::int64_t target =
          std::max<std::int64_t>(1, config.alphas[0].scale_ceil(novel.unit_count()));
      levels.push_back(compress_direct(novel, target, ctx));
      break;
    }
    case Variant::HierarchicalTwoStage:
    case Variant::MixedTwoStage:
      levels.push_back(compress_stage1(chapters, config.alphas[0], config.stage1_structured, ctx));
      levels.push_back(compress_stage2(levels[0], config.alphas[1], ctx));
      break;
  }
  for (auto& a : levels) a.config_id = config.id;
  return levels;
}

PipelineRun run_pipeline(const PipelineConfig& config, const Novel& novel,
                         const std::vector<Chapter>& chapters, const std::vector<int>& sampled,
                         const PipelineContext& ctx, RunStore* store, const RunOptions& options) {
  config.validate();
  std::map<int, const Chapter*> by_index;
  for (const auto& c : chapters) by_index[c.index] = &c;
  std::set<int> seen;
  for (int i : sampled) {
    if (!by_index.count(i)) {
      throw DomainError("sampled chapter " + std::to_string(i) + " does not exist in " + novel.id());
    }
    if (!seen.insert(i).second) throw DomainError("chapter " + std::to_string(i) + " sampled twice");
  }

  const auto states = store && options.resume ? store->item_states() : std::map<ItemKey, ItemRecord>{};
  PipelineRun run;
  run.items.resize(sampled.size());
  std::vector<std::optional<ReconstructionResult>> slots(sampled.size());
  std::vector<std::size_t> pending;
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    const ItemKey key{config.id, novel.id(), sampled[k]};
    run.items[k].key = key;
    const auto it = states.find(key);
    if (it != states.end() && it->second.status == ItemStatus::Done) {
      run.items[k] = it->second;
      slots[k] = store->read_reconstruction(key);
    } else {
      pending.push_back(k);
    }
  }

  auto finish = [&] {
    for (auto& s : slots) {
      if (s) run.results.push_back(std::move(*s));
    }
    return std::move(run);
  };
  if (pending.empty()) return finish();

  try {
    run.artifacts = compress_for(config, novel, chapters, ctx);
  } catch (const Error& e) {
    for (std::size_t k : pending) {
      run.items[k].status = ItemStatus::Failed;
      run.items[k].error = std::string("compression failed: ") + e.what();
      if (store) store->append(item_event(run.items[k]));
    }
    return finish();
  }
  std::vector<std::string> refs;
  for (const auto& a : run.artifacts) {
    const std::string ref = store ? store->write_artifact(a, novel.id())
                                  : RunStore::artifact_ref(config.id, novel.id(), a.level);
    refs.push_back(ref);
    if (store) {
      store->append(json{{"event", "artifact"},
                         {"config", config.id},
                         {"novel", novel.id()},
                         {"level", a.level},
                         {"ref", ref},
                         {"unit_count", a.unit_count},
                         {"target_units", a.target_units},
                         {"flags", a.flags}});
    }
  }
  const OutlineArtifact& outline = run.artifacts.back();

  // Workers expand in any order; the caller commits in sampled order.
  std::mutex mu;
  std::condition_variable cv;
  std::vector<char> finished(pending.size(), 0);
  std::vector<std::string> errors(pending.size());
  std::vector<char> skipped(pending.size(), 0);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t p = next++; p < pending.size(); p = next++) {
      const std::size_t k = pending[p];
      std::optional<ReconstructionResult> result;
      std::string error;
      bool skip = options.stop && options.stop->load();
      if (!skip) {
        try {
          const Chapter& ch = *by_index.at(sampled[k]);
          auto r = expand_to_chapter(outline, chapters, ch.index,
                                     options.min_units.value_or(std::max<std::int64_t>(1, ch.unit_count)),
                                     config.variant, ctx);
          r.config_id = config.id;
          r.novel_id = novel.id();
          r.artifacts = refs;
          result = std::move(r);
        } catch (const Error& e) {
          error = e.what();
        }
      }
      std::lock_guard lock(mu);
      slots[k] = std::move(result);
      errors[p] = std::move(error);
      skipped[p] = skip;
      finished[p] = 1;
      cv.notify_all();
    }
  };

  {
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, ctx.parallelism)),
                                               pending.size());
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);

    for (std::size_t p = 0; p < pending.size(); ++p) {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return finished[p] != 0; });
      const std::size_t k = pending[p];
      ItemRecord& rec = run.items[k];
      if (skipped[p]) {
        rec.status = ItemStatus::Skipped;
      } else if (slots[k]) {
        rec.status = ItemStatus::Done;
        rec.flags = slots[k]->flags;
      } else {
        rec.status = ItemStatus::Failed;
        rec.error = errors[p];
      }
      lock.unlock();
      if (store) {
        if (rec.status == ItemStatus::Done) store->write_reconstruction(*slots[k]);
        store->append(item_event(rec));
      }
    }
  }
  return finish();
}

}  // namespace novelrd::pipeline
