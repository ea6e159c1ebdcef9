#include "textseg/external_refiner.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>

#include "textseg/errors.hpp"
#include "textseg/io.hpp"

namespace textseg {

ExternalRefiner::ExternalRefiner(std::string command) : command_(std::move(command)) {
  if (command_.empty()) throw ConfigError("external refiner: empty command");
}

BinaryMask ExternalRefiner::refine(const ImageTensor& image, const VisualPromptSet& prompts,
                                   const BinaryMask& coarse) const {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  const fs::path dir = fs::temp_directory_path() /
                       ("textseg_refine_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
  fs::create_directories(dir);
  const std::string image_path = (dir / "image.png").string();
  const std::string prompts_path = (dir / "prompts.json").string();
  const std::string coarse_path = (dir / "coarse.png").string();
  const std::string out_path = (dir / "out.png").string();

  save_image_png(image_path, image);
  save_prompts_json(prompts_path, prompts);
  save_mask_png(coarse_path, coarse);

  const std::string cmd = command_ + " '" + image_path + "' '" + prompts_path + "' '" +
                          coarse_path + "' '" + out_path + "'";
  const int status = std::system(cmd.c_str());
  if (status != 0) {
    fs::remove_all(dir);
    throw std::runtime_error("external refiner '" + command_ + "' exited with status " +
                             std::to_string(status));
  }
  BinaryMask refined = load_mask_png(out_path);
  fs::remove_all(dir);
  return refined;
}

RefinerHandle make_refiner(const std::string& selector) {
  if (selector == "mock") return make_mock_refiner();
  constexpr std::string_view kPrefix = "external:";
  if (selector.rfind(kPrefix, 0) == 0)
    return std::make_shared<ExternalRefiner>(selector.substr(kPrefix.size()));
  throw ConfigError("unknown refiner '" + selector + "'; expected mock or external:<cmd>");
}

}  // namespace textseg
