#pragma once

#include <string>

#include "textseg/mask_pipeline.hpp"

namespace textseg {

/// Adapter for an external promptable segmenter. The command is invoked as
///
///   <command> <image.png> <prompts.json> <coarse.png> <out.png>
///
/// and must write the refined mask PNG to the last path and exit 0.
class ExternalRefiner final : public Refiner {
 public:
  explicit ExternalRefiner(std::string command);

  std::string name() const override { return "external:" + command_; }
  BinaryMask refine(const ImageTensor& image, const VisualPromptSet& prompts,
                    const BinaryMask& coarse) const override;

 private:
  std::string command_;
};

/// Resolves "mock" or "external:<command>".
RefinerHandle make_refiner(const std::string& selector);

}  // namespace textseg
