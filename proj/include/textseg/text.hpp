#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace textseg {

/// A text prompt, optionally tied to a class and a prompt configuration (P0-P5).
struct TextPrompt {
  std::string text;
  std::string class_label;
  std::string config_id = "P0";
};

/// Strips characters outside letters, digits, ".,;:()%-/" and space, trims
/// whitespace, and filters captions shorter than 20 characters.
/// Returns nullopt for filtered captions; idempotent on kept values.
std::optional<std::string> clean_caption(const std::string& raw);

/// One prompt per line, UTF-8; blank lines skipped.
std::vector<TextPrompt> load_prompt_file(const std::string& path,
                                         const std::string& config_id,
                                         const std::string& class_label);

/// JSON manifest mapping config id -> class label -> prompt file.
/// File paths are resolved relative to the manifest location.
class PromptManifest {
 public:
  static PromptManifest load(const std::string& manifest_path);

  std::vector<TextPrompt> prompts(const std::string& config_id,
                                  const std::string& class_label) const;
  std::vector<std::string> class_labels(const std::string& config_id) const;
  bool has(const std::string& config_id, const std::string& class_label) const;

 private:
  std::string base_dir_;
  std::map<std::string, std::map<std::string, std::string>> files_;
};

/// Tab-separated `filename<TAB>caption` pairs.
std::vector<std::pair<std::string, std::string>> load_caption_tsv(const std::string& path);

}  // namespace textseg
