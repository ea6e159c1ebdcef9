#include "textseg/text.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "textseg/errors.hpp"

namespace textseg {

namespace {

constexpr std::string_view kKeptPunct = ".,;:()%-/";

bool keep_char(unsigned char c) {
  if (std::isalnum(c) || c == ' ') return true;
  return kKeptPunct.find(static_cast<char>(c)) != std::string_view::npos;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::string> clean_caption(const std::string& raw) {
  std::string cleaned;
  cleaned.reserve(raw.size());
  for (unsigned char c : raw)
    if (keep_char(c)) cleaned.push_back(static_cast<char>(c));
  cleaned = trim(cleaned);
  if (cleaned.size() < 20) return std::nullopt;
  return cleaned;
}

std::vector<TextPrompt> load_prompt_file(const std::string& path,
                                         const std::string& config_id,
                                         const std::string& class_label) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open prompt file: " + path);
  std::vector<TextPrompt> prompts;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    prompts.push_back({line, class_label, config_id});
  }
  if (prompts.empty()) throw ConfigError("prompt file has no prompts: " + path);
  return prompts;
}

PromptManifest PromptManifest::load(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot open prompt manifest: " + manifest_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad prompt manifest " + manifest_path + ": " + e.what());
  }
  PromptManifest m;
  m.base_dir_ = std::filesystem::path(manifest_path).parent_path().string();
  for (const auto& [config, classes] : j.items()) {
    if (!classes.is_object())
      throw ConfigError("prompt manifest: config " + config + " is not an object");
    for (const auto& [label, file] : classes.items())
      m.files_[config][label] = file.get<std::string>();
  }
  return m;
}

std::vector<TextPrompt> PromptManifest::prompts(const std::string& config_id,
                                                const std::string& class_label) const {
  auto cit = files_.find(config_id);
  if (cit == files_.end()) throw ConfigError("prompt manifest: unknown config " + config_id);
  auto lit = cit->second.find(class_label);
  if (lit == cit->second.end())
    throw ConfigError("prompt manifest: no class '" + class_label + "' under " + config_id);
  std::filesystem::path p(lit->second);
  if (p.is_relative()) p = std::filesystem::path(base_dir_) / p;
  return load_prompt_file(p.string(), config_id, class_label);
}

std::vector<std::string> PromptManifest::class_labels(const std::string& config_id) const {
  auto cit = files_.find(config_id);
  if (cit == files_.end()) throw ConfigError("prompt manifest: unknown config " + config_id);
  std::vector<std::string> labels;
  for (const auto& [label, _] : cit->second) labels.push_back(label);
  return labels;
}

bool PromptManifest::has(const std::string& config_id, const std::string& class_label) const {
  auto cit = files_.find(config_id);
  return cit != files_.end() && cit->second.count(class_label) > 0;
}

std::vector<std::pair<std::string, std::string>> load_caption_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open caption file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ConfigError("caption file line missing tab separator: " + line);
    out.emplace_back(trim(line.substr(0, tab)), line.substr(tab + 1));
  }
  return out;
}

}  // namespace textseg
