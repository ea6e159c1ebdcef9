#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "textseg/attribution.hpp"
#include "textseg/grid.hpp"
#include "textseg/image.hpp"
#include "textseg/mask_pipeline.hpp"
#include "textseg/weak_supervision.hpp"

namespace textseg {

/// PNG/JPEG decode to RGB in [0, 1].
ImageTensor load_image(const std::string& path);
void save_image_png(const std::string& path, const ImageTensor& image);

/// Masks persist as 8-bit single-channel PNG, 0/255.
void save_mask_png(const std::string& path, const BinaryMask& mask);
BinaryMask load_mask_png(const std::string& path);

/// Raw little-endian float32 map (row-major) plus a JSON sidecar at
/// <path>.json. Round-trips losslessly at float32 precision.
void save_float_map(const std::string& path, const RealMap& values,
                    const nlohmann::json& sidecar);
RealMap load_float_map(const std::string& path, nlohmann::json* sidecar = nullptr);

void save_saliency(const std::string& path, const SaliencyMap& map);  // name.sal
SaliencyMap load_saliency(const std::string& path);
void save_uncertainty(const std::string& path, const UncertaintyMap& map);  // name.unc
UncertaintyMap load_uncertainty(const std::string& path);

nlohmann::json prompt_set_to_json(const VisualPromptSet& prompts);
VisualPromptSet prompt_set_from_json(const nlohmann::json& j);
void save_prompts_json(const std::string& path, const VisualPromptSet& prompts);
VisualPromptSet load_prompts_json(const std::string& path);

/// Blue-to-red heat blend over the base image.
ImageTensor heat_overlay(const ImageTensor& base, const RealMap& heat);
/// Green tint over mask pixels.
ImageTensor mask_overlay(const ImageTensor& base, const BinaryMask& mask);
/// Horizontal concatenation with thin separators; panels share the height.
ImageTensor hstack_panels(const std::vector<ImageTensor>& panels);

}  // namespace textseg
