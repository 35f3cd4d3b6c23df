#include "novelrd/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"
#include "novelrd/parallel.hpp"
#include "novelrd/pipeline/config.hpp"
#include "novelrd/pipeline/run.hpp"
#include "novelrd/provider/client.hpp"
#include "novelrd/provider/http_backend.hpp"
#include "novelrd/provider/mock.hpp"
#include "novelrd/report.hpp"
#include "novelrd/sampling.hpp"

namespace novelrd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ostream& out(CommandEnv& env) { return env.out ? *env.out : std::cout; }
std::ostream& err(CommandEnv& env) { return env.err ? *env.err : std::cerr; }

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_relative() ? (base / p).lexically_normal() : p;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream o(path, std::ios::binary | std::ios::trunc);
  if (!o) throw ConfigError("cannot write " + path.string());
  o << content;
}

/// Maps library errors onto the exit-code contract.
template <typename Fn>
int guarded(CommandEnv& env, Fn&& fn) {
  try {
    return fn();
  } catch (const IngestError& e) {
    err(env) << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    err(env) << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err(env) << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err(env) << "error: " << e.what() << "\n";
    return kPartial;
  }
}

struct Corpus {
  std::vector<Novel> novels;
  std::map<std::string, std::vector<Chapter>> chapters;
  std::string hash;

  const Novel& novel(const std::string& id) const {
    for (const auto& n : novels) {
      if (n.id() == id) return n;
    }
    throw ConfigError("novel " + id + " is not in the corpus");
  }
};

Corpus load_corpus(const RunConfig& cfg, const std::optional<fs::path>& manifest = std::nullopt) {
  const fs::path path = manifest.value_or(cfg.corpus_manifest);
  if (path.empty()) throw ConfigError("no corpus manifest given");
  Corpus c;
  c.novels = ingest_corpus(load_manifest(path, cfg.unit_mode));
  for (const auto& n : c.novels) c.chapters[n.id()] = split_chapters(n, cfg.chapter_units);
  c.hash = corpus_hash(c.novels);
  return c;
}

pipeline::ConfigGrid load_grid(const RunConfig& cfg) {
  auto grid = cfg.grid_file ? pipeline::ConfigGrid::from_file(*cfg.grid_file)
                            : pipeline::ConfigGrid::embedded();
  for (const auto& e : cfg.extra_configs) grid.add(pipeline::grid_entry_from_json(e));
  return grid;
}

pipeline::TemplateSet load_templates(const RunConfig& cfg) {
  return cfg.templates_dir ? pipeline::TemplateSet::from_directory(*cfg.templates_dir)
                           : pipeline::TemplateSet::embedded();
}

std::unique_ptr<provider::ProviderClient> make_client(const RunConfig& cfg, CommandEnv& env) {
  std::shared_ptr<provider::Backend> backend = env.backend;
  if (!backend) {
    if (cfg.mock) {
      provider::MockOptions mo;
      mo.unit_mode = cfg.unit_mode;
      backend = std::make_shared<provider::MockBackend>(mo);
    } else {
      backend = std::make_shared<provider::HttpBackend>(cfg.provider);
    }
  }
  return std::make_unique<provider::ProviderClient>(cfg.provider, std::move(backend),
                                                    provider::ResponseCache(cfg.cache_path()));
}

sampling::SampleSpec load_spec(const Layout& layout) {
  if (!fs::exists(layout.sample_spec())) {
    throw ConfigError("no sample spec at " + layout.sample_spec().string() + "; run `sample` first");
  }
  try {
    return sampling::sample_spec_from_json(json::parse(read_file(layout.sample_spec())));
  } catch (const json::parse_error& e) {
    throw ConfigError("sample spec is not valid JSON: " + std::string(e.what()));
  }
}

std::string token_line(const provider::ClientStats& s) {
  return "provider calls " + std::to_string(s.provider_calls) + ", cache hits " +
         std::to_string(s.cache_hits) + ", input tokens " + std::to_string(s.input_tokens) +
         ", output tokens " + std::to_string(s.output_tokens);
}

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  try {
    if (j.contains("corpus")) c.corpus_manifest = resolve(base_dir, j.at("corpus").get<std::string>());
    if (j.contains("provider")) c.provider = provider::provider_config_from_json(j.at("provider"));
    if (j.contains("configs")) c.config_ids = j.at("configs").get<std::vector<std::string>>();
    if (j.contains("grid")) c.grid_file = resolve(base_dir, j.at("grid").get<std::string>());
    if (j.contains("extra_configs")) c.extra_configs = j.at("extra_configs");
    c.seed = j.value("seed", c.seed);
    if (j.contains("unit_counting_mode")) {
      c.unit_mode = parse_unit_mode(j.at("unit_counting_mode").get<std::string>());
    }
    if (j.contains("language")) c.language = pipeline::parse_language(j.at("language").get<std::string>());
    if (j.contains("templates_dir")) c.templates_dir = resolve(base_dir, j.at("templates_dir").get<std::string>());
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    if (j.contains("cache_dir")) c.cache_dir = resolve(base_dir, j.at("cache_dir").get<std::string>());
    c.chapter_units = j.value("chapter_units", c.chapter_units);
    if (j.contains("sample")) {
      const json& s = j.at("sample");
      c.sample_n = s.value("n", c.sample_n);
      c.chapters_per_novel = s.value("chapters_per_novel", c.chapters_per_novel);
      if (s.contains("S_h")) {
        for (const auto& [genre, v] : s.at("S_h").items()) c.S_h[parse_genre(genre)] = v.get<double>();
      }
    }
    if (j.contains("min_units") && !j.at("min_units").is_null()) c.min_units = j.at("min_units").get<std::int64_t>();
    if (j.contains("weights")) {
      const json& w = j.at("weights");
      c.composite.w_trad = w.value("trad", c.composite.w_trad);
      c.composite.w_llm = w.value("llm", c.composite.w_llm);
      c.composite.w_struct = w.value("struct", c.composite.w_struct);
    }
    c.composite.norm_cap = j.value("norm_cap", c.composite.norm_cap);
    if (j.contains("epsilon") && !j.at("epsilon").is_null()) c.composite.epsilon = j.at("epsilon").get<double>();
    if (j.contains("stats")) {
      const json& s = j.at("stats");
      c.significance_metric = s.value("metric", c.significance_metric);
      c.pooled = s.value("pooled", c.pooled);
      c.bonferroni = s.value("bonferroni", c.bonferroni);
      c.novel_means = s.value("novel_means", c.novel_means);
    }
    c.mock = j.value("mock", c.mock);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  if (c.chapter_units < 1) throw ConfigError("chapter_units must be positive");
  if (c.chapters_per_novel < 1) throw ConfigError("chapters_per_novel must be positive");
  c.provider.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const ConfigError&) {
    throw ConfigError("cannot read run config " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("run config " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig c = g.config ? load_run_config(*g.config) : RunConfig{};
  if (g.seed) c.seed = *g.seed;
  if (g.mock) c.mock = true;
  if (g.cache_dir) c.cache_dir = *g.cache_dir;
  return c;
}

int cmd_ingest(const GlobalOptions& g, CommandEnv& env, const std::optional<fs::path>& manifest) {
  return guarded(env, [&] {
    const RunConfig cfg = resolve_config(g);
    const Corpus corpus = load_corpus(cfg, manifest);
    json novels = json::array();
    std::size_t chapter_total = 0;
    for (const auto& n : corpus.novels) {
      const auto& chs = corpus.chapters.at(n.id());
      chapter_total += chs.size();
      json chapters = json::array();
      for (const auto& ch : chs) {
        chapters.push_back({{"index", ch.index}, {"unit_count", ch.unit_count}, {"byte_offset", ch.byte_offset}});
      }
      novels.push_back({{"id", n.id()},
                        {"genre", to_string(n.genre())},
                        {"title", n.title()},
                        {"unit_count", n.unit_count()},
                        {"chapter_count", chs.size()},
                        {"chapters", chapters}});
      out(env) << n.id() << "\t" << to_string(n.genre()) << "\t" << n.unit_count() << " units\t"
               << chs.size() << " chapters\n";
    }
    const json index{{"corpus_hash", corpus.hash},
                     {"unit_counting_mode", to_string(cfg.unit_mode)},
                     {"chapter_units", cfg.chapter_units},
                     {"novels", novels}};
    const Layout layout{cfg.output_dir};
    write_file(layout.corpus_index(), index.dump(2) + "\n");
    out(env) << "ingested " << corpus.novels.size() << " novels, " << chapter_total
             << " chapters -> " << layout.corpus_index().string() << "\n";
    return kOk;
  });
}

int cmd_sample(const GlobalOptions& g, CommandEnv& env) {
  return guarded(env, [&] {
    const RunConfig cfg = resolve_config(g);
    const Corpus corpus = load_corpus(cfg);
    std::map<std::string, int> counts;
    for (const auto& [id, chs] : corpus.chapters) counts[id] = static_cast<int>(chs.size());
    const auto spec = sampling::build_sample_spec(corpus.novels, counts, cfg.sample_n, cfg.seed,
                                                  cfg.chapters_per_novel, cfg.S_h);
    const Layout layout{cfg.output_dir};
    write_file(layout.sample_spec(), sampling::to_json(spec).dump(2) + "\n");
    for (const auto& s : spec.strata) {
      out(env) << to_string(s.genre) << ": n_h = " << s.n_h << " of " << s.N_h << "\n";
    }
    out(env) << "sampled " << spec.novels.size() << " novels -> " << layout.sample_spec().string() << "\n";
    return kOk;
  });
}

int cmd_run(const GlobalOptions& g, CommandEnv& env) {
  return guarded(env, [&] {
    const RunConfig cfg = resolve_config(g);
    const Layout layout{cfg.output_dir};
    const Corpus corpus = load_corpus(cfg);
    const auto spec = load_spec(layout);
    const auto grid = load_grid(cfg);
    std::vector<pipeline::PipelineConfig> configs;
    for (const auto& id : cfg.config_ids) {
      const auto& e = grid.find(id);
      if (!e.supported) throw ConfigError("config " + id + " is registered for reference only: " + e.note);
      configs.push_back(e.config);
    }
    const auto templates = load_templates(cfg);
    auto client = make_client(cfg, env);

    pipeline::PipelineContext ctx;
    ctx.client = client.get();
    ctx.templates = &templates;
    ctx.language = cfg.language;
    ctx.unit_mode = cfg.unit_mode;
    ctx.seed = cfg.seed;
    ctx.parallelism = cfg.provider.max_concurrent;

    pipeline::RunStore store(layout.run_dir());
    const std::string spec_text = sampling::to_json(spec).dump();
    std::string ids;
    for (const auto& c : configs) ids += c.id + ";";
    const std::string run_id =
        sha256_hex(corpus.hash + "\n" + spec_text + "\n" + ids + "\n" + templates.version() + "\n" +
                   cfg.provider.model_id)
            .substr(0, 16);
    store.append({{"event", "run_start"},
                  {"run_id", run_id},
                  {"corpus_hash", corpus.hash},
                  {"sample_spec_hash", sha256_hex(spec_text)},
                  {"sample_seed", spec.seed},
                  {"configs", cfg.config_ids},
                  {"template_version", templates.version()},
                  {"model", cfg.provider.model_id}});

    pipeline::RunOptions options;
    options.min_units = cfg.min_units;
    options.stop = env.stop;
    std::int64_t done = 0, failed = 0, skipped = 0;
    for (const auto& config : configs) {
      for (const auto& sn : spec.novels) {
        if (env.stop && env.stop->load()) break;
        const auto& novel = corpus.novel(sn.id);
        auto run = pipeline::run_pipeline(config, novel, corpus.chapters.at(sn.id), sn.chapters, ctx,
                                          &store, options);
        for (const auto& item : run.items) {
          switch (item.status) {
            case pipeline::ItemStatus::Done: ++done; break;
            case pipeline::ItemStatus::Failed:
              ++failed;
              err(env) << "warning: " << item.key.config_id << "/" << item.key.novel_id << "/"
                       << item.key.chapter_index << " failed: " << item.error << "\n";
              break;
            case pipeline::ItemStatus::Skipped: ++skipped; break;
          }
        }
      }
    }
    const auto stats = client->stats();
    store.append({{"event", "run_end"},
                  {"run_id", run_id},
                  {"done", done},
                  {"failed", failed},
                  {"skipped", skipped},
                  {"provider_calls", stats.provider_calls},
                  {"cache_hits", stats.cache_hits},
                  {"input_tokens", stats.input_tokens},
                  {"output_tokens", stats.output_tokens}});
    out(env) << "run " << run_id << ": " << done << " done, " << failed << " failed, " << skipped
             << " skipped\n"
             << token_line(stats) << "\n";
    if (env.stop && env.stop->load()) {
      err(env) << "interrupted; rerun to complete the remaining items\n";
      return kPartial;
    }
    if (failed > 0) {
      if (g.strict) return kPartial;
      err(env) << "warning: " << failed << " item(s) failed and are excluded from statistics\n";
    }
    return kOk;
  });
}

int cmd_evaluate(const GlobalOptions& g, CommandEnv& env) {
  return guarded(env, [&] {
    const RunConfig cfg = resolve_config(g);
    const Layout layout{cfg.output_dir};
    const Corpus corpus = load_corpus(cfg);
    const auto grid = load_grid(cfg);
    const auto templates = load_templates(cfg);
    auto client = make_client(cfg, env);
    pipeline::RunStore store(layout.run_dir());
    auto recs = store.done_reconstructions();
    if (recs.empty()) throw ConfigError("no reconstructions under " + layout.run_dir().string() + "; run `run` first");

    auto rank = [&](const std::string& id) {
      const auto it = std::find(cfg.config_ids.begin(), cfg.config_ids.end(), id);
      return it - cfg.config_ids.begin();
    };
    std::stable_sort(recs.begin(), recs.end(), [&](const auto& a, const auto& b) {
      return std::make_tuple(rank(a.config_id), a.config_id, a.novel_id, a.chapter_index) <
             std::make_tuple(rank(b.config_id), b.config_id, b.novel_id, b.chapter_index);
    });

    std::vector<std::optional<report::MetricRecord>> slots(recs.size());
    std::vector<std::string> failures(recs.size());
    parallel_for(recs.size(), cfg.provider.max_concurrent, [&](std::size_t i) {
      const auto& r = recs[i];
      try {
        const Novel& novel = corpus.novel(r.novel_id);
        const auto& chs = corpus.chapters.at(r.novel_id);
        const auto it = std::find_if(chs.begin(), chs.end(),
                                     [&](const Chapter& c) { return c.index == r.chapter_index; });
        if (it == chs.end()) throw ConfigError("chapter " + std::to_string(r.chapter_index) + " missing");
        auto ev = metrics::evaluate_chapter(it->text, r.reconstructed_text, *client, templates,
                                            cfg.language, cfg.unit_mode, cfg.composite);
        report::MetricRecord m;
        m.config_id = r.config_id;
        m.novel_id = r.novel_id;
        m.genre = std::string(to_string(novel.genre()));
        m.chapter_index = r.chapter_index;
        m.R = pipeline::compute_R(grid.find(r.config_id).config);
        m.report = std::move(ev.report);
        m.composite = ev.composite;
        m.warnings = std::move(ev.warnings);
        m.judge_error = std::move(ev.judge_error);
        slots[i] = std::move(m);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    });

    std::vector<report::MetricRecord> records;
    std::int64_t partial = 0;
    std::int64_t failed = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!slots[i]) {
        ++failed;
        err(env) << "warning: evaluation of " << recs[i].config_id << "/" << recs[i].novel_id << "/"
                 << recs[i].chapter_index << " failed: " << failures[i] << "\n";
        continue;
      }
      if (slots[i]->composite.partial) ++partial;
      records.push_back(std::move(*slots[i]));
    }
    report::write_metric_records(layout.metrics(), records);
    out(env) << "evaluated " << records.size() << " chapters (" << partial << " partial, " << failed
             << " failed) -> " << layout.metrics().string() << "\n"
             << token_line(client->stats()) << "\n";
    if (partial > 0 || failed > 0) {
      err(env) << "warning: partial or failed records are flagged in the output\n";
      if (g.strict) return kPartial;
    }
    return kOk;
  });
}

int cmd_report(const GlobalOptions& g, CommandEnv& env) {
  return guarded(env, [&] {
    const RunConfig cfg = resolve_config(g);
    const Layout layout{cfg.output_dir};
    if (!fs::exists(layout.metrics())) {
      throw ConfigError("no metric records at " + layout.metrics().string() + "; run `evaluate` first");
    }
    const auto records = report::read_metric_records(layout.metrics());
    if (records.empty()) throw ConfigError("metric record file " + layout.metrics().string() + " is empty");
    report::ReportOptions options;
    options.significance.metric = cfg.significance_metric;
    options.significance.pooled = cfg.pooled;
    options.significance.bonferroni = cfg.bonferroni;
    options.novel_means = cfg.novel_means;
    const auto bundle = report::build_report(records, load_grid(cfg), options);
    report::write_report(bundle, layout.report_dir());
    for (const auto& w : bundle.warnings) err(env) << "warning: " << w << "\n";
    out(env) << bundle.summary_csv;
    out(env) << "report written to " << layout.report_dir().string() << "\n";
    return kOk;
  });
}

int cmd_verify(const GlobalOptions& g, CommandEnv& env) {
  return guarded(env, [&] {
    const RunConfig cfg = resolve_config(g);
    const Layout layout{cfg.output_dir};
    bool ok = true;
    auto check = [&](bool pass, const std::string& what) {
      out(env) << (pass ? "PASS " : "FAIL ") << what << "\n";
      ok = ok && pass;
    };

    const auto grid = load_grid(cfg);
    std::string grid_error;
    for (const auto& e : grid.entries()) {
      try {
        const double r = pipeline::compute_R(e.config);
        char printed[32];
        std::snprintf(printed, sizeof printed, "%.3f", r);
        if (!e.printed_r.empty() && e.printed_r != printed) {
          out(env) << "NOTE R of " << e.config.id << " = " << e.config.R_exact().str()
                   << ", printed " << e.printed_r << "\n";
        }
      } catch (const ConfigError& ex) {
        grid_error = e.config.id + ": " + ex.what();
      }
    }
    check(grid_error.empty(), "configuration grid validates" + (grid_error.empty() ? "" : " (" + grid_error + ")"));

    pipeline::RunStore store(layout.run_dir());
    const auto recs = store.done_reconstructions();
    const provider::ResponseCache cache(cfg.cache_path());
    std::size_t missing = 0;
    for (const auto& r : recs) {
      for (const auto& k : r.provenance) missing += cache.contains(k) ? 0 : 1;
    }
    check(missing == 0, "provenance of " + std::to_string(recs.size()) +
                            " reconstructions present in cache (" + std::to_string(missing) + " missing)");

    if (fs::exists(layout.metrics())) {
      const auto records = report::read_metric_records(layout.metrics());
      check(records.size() == recs.size(), "metric records (" + std::to_string(records.size()) +
                                               ") match reconstructions (" + std::to_string(recs.size()) + ")");
      const auto summary_path = layout.report_dir() / "summary.csv";
      if (fs::exists(summary_path) && !records.empty()) {
        check(read_file(summary_path) == report::summary_csv(records),
              "summary.csv recomputes from metric records");
      } else {
        check(false, "summary.csv present");
      }
    } else {
      check(false, "metric records present");
    }
    return ok ? kOk : kPartial;
  });
}

}  // namespace novelrd::cli
