#include "novelrd/pipeline/templates.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "novelrd/error.hpp"
#include "novelrd/hash.hpp"
#include "novelrd/resources.hpp"

namespace novelrd::pipeline {

namespace {

constexpr TemplateId kAll[] = {TemplateId::LongWriterExpand,   TemplateId::Stage1Extract,
                               TemplateId::Stage1Summary,      TemplateId::Stage2Compress,
                               TemplateId::Stage2ExpandDetail, TemplateId::DirectCompress,
                               TemplateId::DirectExpand,       TemplateId::Judge,
                               TemplateId::JsonRepair};
constexpr Language kLanguages[] = {Language::Zh, Language::En};

std::string key_of(TemplateId id, Language lang) {
  return std::string(to_string(lang)) + "/" + std::string(file_stem(id));
}

std::string strip_final_newline(std::string_view s) {
  if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

Language parse_language(std::string_view name) {
  if (name == "zh") return Language::Zh;
  if (name == "en") return Language::En;
  throw ConfigError("unknown prompt language '" + std::string(name) + "'");
}

std::string_view to_string(Language lang) { return lang == Language::Zh ? "zh" : "en"; }

std::string_view file_stem(TemplateId id) {
  switch (id) {
    case TemplateId::LongWriterExpand: return "longwriter_expand";
    case TemplateId::Stage1Extract: return "stage1_extract";
    case TemplateId::Stage1Summary: return "stage1_summary";
    case TemplateId::Stage2Compress: return "stage2_compress";
    case TemplateId::Stage2ExpandDetail: return "stage2_expand_detail";
    case TemplateId::DirectCompress: return "direct_compress";
    case TemplateId::DirectExpand: return "direct_expand";
    case TemplateId::Judge: return "judge";
    case TemplateId::JsonRepair: return "json_repair";
  }
  return "";
}

std::string render_template(std::string_view tmpl, const Bindings& bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() &&
             (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) {
        ++j;
      }
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        const std::string name(tmpl.substr(i + 1, j - i - 1));
        const auto it = bindings.find(name);
        if (it == bindings.end()) throw ConfigError("template placeholder {" + name + "} is unbound");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

TemplateSet TemplateSet::embedded() {
  TemplateSet set;
  std::string acc;
  for (Language lang : kLanguages) {
    for (TemplateId id : kAll) {
      const std::string key = key_of(id, lang);
      set.texts_[key] = strip_final_newline(resources::get("templates/" + key + ".txt"));
      acc += key + '\0' + set.texts_[key] + '\0';
    }
  }
  set.version_ = sha256_hex(acc);
  return set;
}

TemplateSet TemplateSet::from_directory(const std::filesystem::path& dir) {
  TemplateSet set;
  std::string acc;
  for (Language lang : kLanguages) {
    for (TemplateId id : kAll) {
      const std::string key = key_of(id, lang);
      const auto path = dir / (key + ".txt");
      std::ifstream in(path, std::ios::binary);
      if (!in) throw ConfigError("missing prompt template " + path.string());
      std::ostringstream buf;
      buf << in.rdbuf();
      set.texts_[key] = strip_final_newline(buf.str());
      acc += key + '\0' + set.texts_[key] + '\0';
    }
  }
  set.version_ = sha256_hex(acc);
  return set;
}

std::string_view TemplateSet::get(TemplateId id, Language lang) const {
  return texts_.at(key_of(id, lang));
}

std::string TemplateSet::render(TemplateId id, Language lang, const Bindings& bindings) const {
  return render_template(get(id, lang), bindings);
}

}  // namespace novelrd::pipeline
